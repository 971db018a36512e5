mod evaluate;
mod fuse;
mod losses;
mod refine;
mod render;

use std::path::Path;

use colonorm::evaluation::MetricSummary;
use serde::{Deserialize, Serialize};

pub use evaluate::evaluate;
pub use fuse::fuse;
pub use losses::losses;
pub use refine::refine;
pub use render::render;

use crate::args::ReportArgs;
use crate::error::CliResult;
use evaluate::EvaluationReport;

pub(crate) fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| colonorm::Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    Ok(())
}

/// Depth metrics as mean and standard deviation.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Aggregate {
    pub abs_rel: MetricSummary<f64>,
    pub sq_rel: MetricSummary<f64>,
    pub rmse: MetricSummary<f64>,
    pub log_rmse: MetricSummary<f64>,
}

impl From<[MetricSummary<f64>; 4]> for Aggregate {
    fn from([abs_rel, sq_rel, rmse, log_rmse]: [MetricSummary<f64>; 4]) -> Self {
        Self {
            abs_rel,
            sq_rel,
            rmse,
            log_rmse,
        }
    }
}

pub(crate) const HEADER: &str = "Abs Rel         | Sq Rel          | RMSE            | log RMSE        | Chamfer";

fn cell(s: &MetricSummary<f64>) -> String {
    format!("{:.3} ± {:.3}", s.mean, s.std)
}

/// One table row: each metric as `mean ± std`.
pub(crate) fn row(a: &Aggregate, chamfer: Option<f64>) -> String {
    let chamfer = chamfer.map_or_else(|| "-".to_string(), |c| format!("{c:.3}"));
    format!(
        "{:<15} | {:<15} | {:<15} | {:<15} | {chamfer}",
        cell(&a.abs_rel),
        cell(&a.sq_rel),
        cell(&a.rmse),
        cell(&a.log_rmse)
    )
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    let width = args
        .reports
        .iter()
        .map(|p| p.file_stem().map_or(0, |s| s.len()))
        .max()
        .unwrap_or(0)
        .max(6);
    println!("{:<width$} | {HEADER}", "method");
    for path in &args.reports {
        let r: EvaluationReport = colonorm::io::read_json(path)?;
        let label = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        println!("{label:<width$} | {}", row(&r.aggregate, r.chamfer.as_ref().map(|c| c.distance)));
    }
    Ok(())
}
