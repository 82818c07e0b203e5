use std::io::{self, Write};

use super::{EnsembleStats, Path};
use crate::artifact::{fmt_f64, ArtifactHeader};

/// Writes one path as `t,A,I,u,absorbed`.
pub fn write_path_csv<W: Write + ?Sized>(w: &mut W, header: &ArtifactHeader, path: &Path) -> io::Result<()> {
    header.write_comment(w)?;
    writeln!(w, "t,A,I,u,absorbed")?;
    for s in &path.samples {
        writeln!(w, "{},{},{},{},{}", fmt_f64(s.t), fmt_f64(s.a), fmt_f64(s.i), fmt_f64(s.u), u8::from(s.absorbed))?;
    }
    Ok(())
}

/// Writes per-time ensemble statistics keyed by `t`.
pub fn write_ensemble_csv<W: Write + ?Sized>(w: &mut W, header: &ArtifactHeader, stats: &EnsembleStats) -> io::Result<()> {
    header.write_comment(w)?;
    writeln!(w, "t,mean_A,var_A,mean_I,absorbed_fraction")?;
    for k in 0..stats.times.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(stats.times[k]),
            fmt_f64(stats.mean_a[k]),
            fmt_f64(stats.var_a[k]),
            fmt_f64(stats.mean_i[k]),
            fmt_f64(stats.absorbed_by_time[k])
        )?;
    }
    Ok(())
}
