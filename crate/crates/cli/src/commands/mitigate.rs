//! `mitigate`: re-processes the noisy rows of a `timeseries.csv`.

use std::path::Path;

use hubbard_ts::mitigation::{rescale, zne_extract, MitigationMethod};
use serde::Serialize;

use super::Ctx;
use crate::error::CliError;
use crate::output::{num, read_csv};

#[derive(Serialize)]
struct Summary {
    input: String,
    method: MitigationMethod,
    rows: usize,
}

fn column(header: &[String], name: &str) -> Result<usize, CliError> {
    header.iter().position(|h| h == name).ok_or_else(|| CliError::Config(format!("input lacks a `{name}` column")))
}

fn parse(rec: &csv::StringRecord, idx: usize, name: &str) -> Result<f64, CliError> {
    rec.get(idx)
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| CliError::Config(format!("row has no numeric `{name}`")))
}

pub fn run(ctx: &Ctx, input: &Path) -> Result<(), CliError> {
    let res = ctx.cfg.resolve(false)?;
    let method = ctx.cfg.mitigation.method;
    if method == MitigationMethod::Symmetry {
        return Err(CliError::Config("symmetry filtering needs raw counts; run it inside `timeseries`".into()));
    }
    let (header, records) = read_csv(input)?;
    let col = |n: &str| column(&header, n);
    let (ie, im, it, iv) = (col("energy")?, col("m")?, col("t")?, col("variant")?);
    let (ip0, ipi, isg, iq) = (col("p0")?, col("p_pi")?, col("sigma")?, col("q")?);
    let (if0, ifp) = (col("p0_fold")?, col("p_pi_fold")?);

    let mut rows = Vec::new();
    for rec in records.iter().filter(|r| r.get(iv) == Some("noisy")) {
        let (p0, p_pi, sigma) = (parse(rec, ip0, "p0")?, parse(rec, ipi, "p_pi")?, parse(rec, isg, "sigma")?);
        let (q, gamma) = match method {
            MitigationMethod::None => (1.0, 0.0),
            MitigationMethod::Rescale => (parse(rec, iq, "q")?, 0.0),
            MitigationMethod::ZneRescale => {
                let est = zne_extract(parse(rec, if0, "p0_fold")?, parse(rec, ifp, "p_pi_fold")?, res.lattice.n_qubits())?;
                (est.q, est.gamma)
            }
            MitigationMethod::Symmetry => unreachable!("rejected above"),
        };
        rows.push(vec![
            rec[ie].to_string(),
            rec[im].to_string(),
            rec[it].to_string(),
            num(rescale(p0, p_pi, q)?),
            num(sigma / q),
            num(q),
            num(gamma),
        ]);
    }
    ctx.out.csv("mitigated.csv", &["energy", "m", "t", "re_g_mitigated", "sigma", "q_used", "gamma_used"], &rows)?;
    ctx.out.json(
        "mitigate_summary.json",
        &Summary {
            input: input.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            method,
            rows: rows.len(),
        },
    )
}
