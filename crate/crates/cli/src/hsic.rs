//! The `hsic` command: a kernel dependence statistic between two aligned
//! numeric tables, with an optional permutation test.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use kmva::data::{load_delimited, LoadOptions};
use kmva::dependence::hsic_report;
use kmva::Result;

use crate::common::{parse_delimiter, write_report, KernelArgs};

#[derive(Args, Debug)]
pub struct HsicArgs {
    /// First numeric table.
    pub x: PathBuf,

    /// Second numeric table, same number of rows.
    pub y: PathBuf,

    /// Field delimiter for both files; inferred when omitted.
    #[arg(long, value_parser = parse_delimiter)]
    pub delimiter: Option<u8>,

    /// Treat the first row of each file as column names.
    #[arg(long)]
    pub header: bool,

    /// Kernel on the first table (the second reuses it unless
    /// --kernel-y/--sigma-y say otherwise).
    #[command(flatten)]
    pub kernel: KernelArgs,

    /// Kernel family on the second table.
    #[arg(long)]
    pub kernel_y: Option<String>,

    /// Bandwidth on the second table.
    #[arg(long)]
    pub sigma_y: Option<String>,

    /// Permutations of the second table's rows for the p-value; 0 skips
    /// the test.
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,

    /// Seed of the permutation test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Report file (JSON); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &HsicArgs) -> Result<()> {
    let opts = LoadOptions {
        delimiter: args.delimiter,
        has_header: args.header,
        label_column: None,
    };
    let x = load_delimited(&args.x, &opts)?;
    let y = load_delimited(&args.y, &opts)?;

    let kx = args.kernel.choice()?;
    let mut y_args = args.kernel.clone();
    if let Some(k) = &args.kernel_y {
        y_args.kernel = k.clone();
    }
    if let Some(s) = &args.sigma_y {
        y_args.sigma = s.clone();
    }
    let ky = y_args.choice()?;

    let report = hsic_report(
        &x.x.view(),
        &y.x.view(),
        &kx,
        &ky,
        args.permutations,
        args.seed,
    )?;

    let config = json!({
        "command": "hsic",
        "x": args.x.display().to_string(),
        "y": args.y.display().to_string(),
        "delimiter": args.delimiter.map(|d| (d as char).to_string()),
        "header": args.header,
        "kernel_x": args.kernel.config_json(),
        "kernel_y": y_args.config_json(),
        "permutations": args.permutations,
        "seed": args.seed,
    });
    write_report(
        args.out.as_deref(),
        &json!({
            "config": config,
            "statistic": report.statistic,
            "null_mean": report.null_mean,
            "p_value": report.p_value,
            "permutations": report.permutations,
            "n_rows": report.n_rows,
        }),
    )
}
