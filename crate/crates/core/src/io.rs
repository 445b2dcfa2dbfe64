//! CSV emission with 17 significant digits, so files round-trip `f64` exactly.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::grid::Field;
use crate::particles::ParticleEnsemble;
use crate::reference::{rarefaction, viscous_rarefaction};
use crate::scalar::Scalar;
use crate::solver::primitive;

pub const PROFILE_HEADER: &str = "t,x,u,U";
pub const REFERENCE_HEADER: &str = "t,x,WR,Z";
pub const PARTICLE_HEADER: &str = "t,k,x_k";

/// Scientific notation with 17 significant digits.
pub fn fmt17<T: Scalar>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

fn create(path: &Path) -> io::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// One row per cell: `t,x,u,U`.
pub fn write_profile<T: Scalar>(path: &Path, u: &Field<T>) -> io::Result<()> {
    let mut w = create(path)?;
    write_profile_to(&mut w, u)?;
    w.flush()
}

pub fn write_profile_to<T: Scalar>(w: &mut impl Write, u: &Field<T>) -> io::Result<()> {
    let big_u = primitive(u);
    writeln!(w, "{PROFILE_HEADER}")?;
    let t = fmt17(u.time);
    for (j, (&v, &p)) in u.values.iter().zip(&big_u.values).enumerate() {
        writeln!(w, "{t},{},{},{}", fmt17(u.grid.center(j)), fmt17(v), fmt17(p))?;
    }
    Ok(())
}

pub fn write_diagnostics<T: Scalar>(path: &Path, records: &[DiagnosticsRecord<T>]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{}", DiagnosticsRecord::<T>::CSV_HEADER)?;
    for r in records {
        let row: Vec<String> = r.values().iter().map(|&v| fmt17(v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()
}

/// `t,x,WR,Z` at the given sample points; `Z` is written as `W^R` when `eps = 0`.
pub fn write_reference<T: Scalar>(path: &Path, xs: &[T], times: &[T], amplitude: T, eps: T) -> crate::Result<()> {
    let mut w = create(path).map_err(io_err)?;
    writeln!(w, "{REFERENCE_HEADER}").map_err(io_err)?;
    for &t in times {
        for &x in xs {
            let wr = rarefaction(x, t, amplitude)?;
            let z = if eps > T::zero() {
                viscous_rarefaction(x, t, amplitude, eps)?
            } else {
                wr
            };
            writeln!(w, "{},{},{},{}", fmt17(t), fmt17(x), fmt17(wr), fmt17(z)).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// `t,k,x_k` for each snapshot in turn; `k` is the particle label.
pub fn write_particles<T: Scalar>(path: &Path, snapshots: &[&ParticleEnsemble<T>]) -> io::Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{PARTICLE_HEADER}")?;
    for e in snapshots {
        let t = fmt17(e.time);
        for (k, &x) in e.positions.iter().enumerate() {
            writeln!(w, "{t},{k},{}", fmt17(x))?;
        }
    }
    w.flush()
}

fn io_err(e: io::Error) -> crate::Error {
    crate::Error::InvalidParameter {
        name: "output",
        reason: e.to_string(),
    }
}
