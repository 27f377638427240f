//! Field snapshot files: a short text header followed by little-endian
//! `f64` node values in row-major order, one component after another.
//!
//! ```text
//! mhdlab-snapshot 1
//! shape 65 65 1
//! spacing 0.015625 0.015625 1.0
//! field H
//! time 0.25
//! components 3
//! end
//! <binary block>
//! ```

use super::field::{ScalarField, VectorField};
use super::grid::{Grid, Parity};
use super::FieldError;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: &str = "mhdlab-snapshot 1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub shape: [usize; 3],
    pub spacing: [f64; 3],
    pub name: String,
    pub time: f64,
    pub components: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn scalar(grid: &Grid, name: &str, time: f64, f: &ScalarField) -> Self {
        Snapshot {
            shape: grid.shape(),
            spacing: grid.spacing(),
            name: name.to_string(),
            time,
            components: vec![f.data.clone()],
        }
    }

    pub fn vector(grid: &Grid, name: &str, time: f64, v: &VectorField) -> Self {
        Snapshot {
            shape: grid.shape(),
            spacing: grid.spacing(),
            name: name.to_string(),
            time,
            components: v.c.iter().map(|c| c.data.clone()).collect(),
        }
    }

    pub fn to_scalar(&self, grid: &Grid, parity: Parity) -> Result<ScalarField, FieldError> {
        self.check(grid, 1)?;
        ScalarField::from_vec(grid, [parity; 3], self.components[0].clone())
    }

    pub fn to_vector(&self, grid: &Grid, parity: Parity) -> Result<VectorField, FieldError> {
        self.check(grid, 3)?;
        let c = |m: usize| ScalarField::from_vec(grid, [parity; 3], self.components[m].clone());
        Ok(VectorField::new([c(0)?, c(1)?, c(2)?]))
    }

    fn check(&self, grid: &Grid, components: usize) -> Result<(), FieldError> {
        if self.shape != grid.shape() || self.components.len() != components {
            return Err(FieldError::Snapshot(format!(
                "snapshot {:?} with {} components does not fit grid {:?}",
                self.shape,
                self.components.len(),
                grid.shape()
            )));
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), FieldError> {
        let [nx, ny, nz] = self.shape;
        let [hx, hy, hz] = self.spacing;
        // `{:?}` prints the shortest string that parses back to the same f64
        write!(
            w,
            "{SNAPSHOT_MAGIC}\nshape {nx} {ny} {nz}\nspacing {hx:?} {hy:?} {hz:?}\nfield {}\ntime {:?}\ncomponents {}\nend\n",
            self.name,
            self.time,
            self.components.len()
        )?;
        let mut bytes = Vec::with_capacity(8 * nx * ny * nz * self.components.len());
        for c in &self.components {
            for v in c {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self, FieldError> {
        let mut r = BufReader::new(r);
        let mut line = String::new();
        let mut next = |expect: &str| -> Result<Vec<String>, FieldError> {
            line.clear();
            r.read_line(&mut line)?;
            let text = line.trim_end_matches('\n');
            let mut parts = text.splitn(2, ' ');
            match parts.next() {
                Some(key) if key == expect => Ok(parts.next().unwrap_or("").split(' ').map(str::to_string).collect()),
                _ => Err(FieldError::Snapshot(format!("expected '{expect}' line, found '{text}'"))),
            }
        };
        let bad = |what: &str| FieldError::Snapshot(format!("malformed {what}"));
        let magic = next("mhdlab-snapshot")?;
        if magic != ["1"] {
            return Err(FieldError::Snapshot(format!("unsupported snapshot version {magic:?}")));
        }
        let shape: Vec<usize> =
            next("shape")?.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad("shape"))?;
        let spacing: Vec<f64> =
            next("spacing")?.iter().map(|s| s.parse()).collect::<Result<_, _>>().map_err(|_| bad("spacing"))?;
        let name = next("field")?.join(" ");
        let time: f64 = next("time")?.join(" ").parse().map_err(|_| bad("time"))?;
        let count: usize = next("components")?.join(" ").parse().map_err(|_| bad("component count"))?;
        next("end")?;
        if shape.len() != 3 || spacing.len() != 3 {
            return Err(bad("grid header"));
        }
        let len = shape[0] * shape[1] * shape[2];
        let mut bytes = vec![0u8; 8 * len * count];
        r.read_exact(&mut bytes)?;
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(FieldError::Snapshot("trailing bytes after data block".into()));
        }
        let values: Vec<f64> =
            bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect();
        Ok(Snapshot {
            shape: [shape[0], shape[1], shape[2]],
            spacing: [spacing[0], spacing[1], spacing[2]],
            name,
            time,
            components: values.chunks(len.max(1)).map(<[f64]>::to_vec).collect(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), FieldError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FieldError> {
        Snapshot::read_from(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = Grid::new([7, 5, 1], [1.0, 0.3, 1.0]).unwrap();
        let v = VectorField::from_fn(&g, Parity::Odd, |x| [x[0].sin() / 3.0, 1e-300 * x[1], -x[0] * x[1]]);
        let snap = Snapshot::vector(&g, "H", 0.1 + 0.2, &v);
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        let back = Snapshot::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.time.to_bits(), (0.1f64 + 0.2).to_bits());
        assert_eq!(back.to_vector(&g, Parity::Odd).unwrap(), v);
    }

    #[test]
    fn rejects_bad_headers_and_truncation() {
        assert!(Snapshot::read_from(&b"not-a-snapshot\n"[..]).is_err());
        let g = Grid::unit_box([3, 1, 1]);
        let snap = Snapshot::scalar(&g, "rho", 0.0, &ScalarField::constant(&g, 1.0));
        let mut buf = Vec::new();
        snap.write_to(&mut buf).unwrap();
        buf.pop();
        assert!(Snapshot::read_from(buf.as_slice()).is_err());
        buf.extend_from_slice(&[0, 0]);
        assert!(Snapshot::read_from(buf.as_slice()).is_err());
        assert!(snap.to_vector(&g, Parity::Even).is_err());
    }
}
