//! The `toydata` command: seeded synthetic datasets written as labeled
//! CSV, ready for `fit`/`crossval`/`benchmark` runs or external plotting.

use std::path::PathBuf;

use clap::Args;
use ndarray::Array2;
use serde_json::json;

use kmva::synth::{blobs, three_arcs, two_moons};
use kmva::{Error, Result};

use crate::common::{open_output, write_table};

#[derive(Args, Debug)]
pub struct ToydataArgs {
    /// Recipe to sample.
    #[arg(long, default_value = "three-arcs", value_parser = ["three-arcs", "two-moons", "blobs"])]
    pub generator: String,

    /// Rows per class (at least 2).
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,

    /// Isotropic noise level; for blobs this is the spread.
    #[arg(long, default_value_t = 0.15)]
    pub noise: f64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Blob centers, one per class, as comma-separated coordinates
    /// (repeat the flag; all centers need the same dimension).
    #[arg(long = "center", value_name = "X,Y,...")]
    pub centers: Vec<String>,

    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_centers(raw: &[String]) -> Result<Array2<f64>> {
    if raw.is_empty() {
        return Err(Error::invalid(
            "blobs need at least one --center X,Y,... per class",
        ));
    }
    let parsed: Vec<Vec<f64>> = raw
        .iter()
        .map(|s| {
            s.split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::invalid(format!("cannot read '{t}' in --center '{s}' as a number"))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let d = parsed[0].len();
    if parsed.iter().any(|c| c.len() != d) {
        return Err(Error::invalid("all --center values need the same dimension"));
    }
    let mut m = Array2::<f64>::zeros((parsed.len(), d));
    for (i, c) in parsed.iter().enumerate() {
        for (j, &v) in c.iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    Ok(m)
}

pub fn run(args: &ToydataArgs) -> Result<()> {
    if args.per_class < 2 {
        return Err(Error::invalid("--per-class must be at least 2"));
    }
    let ds = match args.generator.as_str() {
        "three-arcs" => three_arcs(args.per_class, args.noise, args.seed)?,
        "two-moons" => two_moons(args.per_class, args.noise, args.seed)?,
        "blobs" => {
            let centers = parse_centers(&args.centers)?;
            blobs(args.per_class, &centers.view(), args.noise, args.seed)?
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown generator '{other}' (three-arcs, two-moons, blobs)"
            )))
        }
    };

    let labels = ds
        .labels()
        .expect("every synthetic recipe labels its rows");
    let header: Vec<String> = (0..ds.n_cols())
        .map(|j| format!("f{j}"))
        .chain(std::iter::once("class".to_string()))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<String>> = (0..ds.n_rows())
        .map(|i| {
            ds.x.row(i)
                .iter()
                .map(|v| v.to_string())
                .chain(std::iter::once(labels[i].clone()))
                .collect()
        })
        .collect();

    let config = json!({
        "command": "toydata",
        "generator": args.generator,
        "per_class": args.per_class,
        "noise": args.noise,
        "seed": args.seed,
        "centers": args.centers,
        "out": args.out.as_ref().map(|p| p.display().to_string()),
    });
    let mut out = open_output(args.out.as_deref())?;
    write_table(&mut out, &config, &header_refs, &rows)
}
