use std::io::Write;
use std::path::Path;

use crate::amr::ConvergenceLog;
use crate::error::{Error, Result};

const COLUMNS: [&str; 8] = ["iter", "n_elements", "n_dofs", "estimate", "r1_sum", "r2_sum", "jump_sum", "wall_s"];

/// Writes the log as CSV. Error columns appear only when every row has them.
pub fn write_log_to(w: impl Write, log: &ConvergenceLog) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let with_errors = !log.is_empty() && log.rows.iter().all(|r| r.errors.is_some());
    let mut header = COLUMNS.to_vec();
    if with_errors {
        header.extend(["err_u_h1", "err_p_l2"]);
    }
    out.write_record(&header)?;
    for r in &log.rows {
        let mut rec = vec![
            r.iter.to_string(),
            r.n_elements.to_string(),
            r.n_dofs.to_string(),
            r.estimate.to_string(),
            r.r1_sum.to_string(),
            r.r2_sum.to_string(),
            r.jump_sum.to_string(),
            r.wall_s.to_string(),
        ];
        if let (true, Some(e)) = (with_errors, r.errors) {
            rec.push(e.velocity_h1.to_string());
            rec.push(e.pressure_l2.to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_log(path: impl AsRef<Path>, log: &ConvergenceLog) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_log_to(file, log).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    })
}
