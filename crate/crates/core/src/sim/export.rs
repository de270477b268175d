use std::io::Write;

use super::Trajectory;
use crate::error::{Error, Result};
use crate::model::SwitchedSystemSpec;
use crate::numlin::vector_norm;

/// Value of the `jump` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum JumpFlag {
    Flow = 0,
    PreJump = 1,
    PostJump = 2,
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::InvalidArgument(format!("csv export failed: {e}"))
}

/// Columns `time, x1..xn, mode, norm, jump`. Each jump instant gives a
/// pre-jump row followed by the post-jump row.
pub fn write_csv<W: Write>(traj: &Trajectory, spec: &SwitchedSystemSpec, out: W) -> Result<()> {
    let n = spec.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["time".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend(["mode", "norm", "jump"].map(String::from));
    w.write_record(&header).map_err(io)?;

    let mut jumps = traj.jumps.iter().peekable();
    for s in &traj.samples {
        let mut flag = JumpFlag::Flow;
        if let Some(j) = jumps.peek() {
            if j.t == s.t {
                let prev_mode = traj
                    .event_states
                    .iter()
                    .rev()
                    .find(|e| e.t < j.t)
                    .map_or_else(String::new, |e| e.mode.to_string());
                let mut row = vec![format!("{}", j.t)];
                row.extend(j.pre.iter().map(|v| format!("{v}")));
                row.push(prev_mode);
                row.push(format!("{}", vector_norm(&j.pre, &spec.norm)));
                row.push((JumpFlag::PreJump as u8).to_string());
                w.write_record(&row).map_err(io)?;
                flag = JumpFlag::PostJump;
                jumps.next();
            }
        }
        let mut row = vec![format!("{}", s.t)];
        row.extend(s.x.iter().map(|v| format!("{v}")));
        row.push(s.mode.to_string());
        row.push(format!("{}", vector_norm(&s.x, &spec.norm)));
        row.push((flag as u8).to_string());
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
