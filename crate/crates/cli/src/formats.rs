//! JSON file formats for spaces, envelopes, products, maps and matrices.
//!
//! A matrix is an array of rows; each entry is `[re, im]`.

use std::path::Path;

use quasimult::numerics::ComplexMatrix;
use quasimult::{BilinearProduct, EnvelopeEmbedding, OperatorSpace, Tolerances, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ambient {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeJson {
    pub n1: usize,
    pub n2: usize,
    pub i11: Vec<MatrixJson>,
    pub i22: Vec<MatrixJson>,
    pub ix: Vec<MatrixJson>,
}

/// Space file; an envelope file is a space file over the `N × N` ambient
/// with the `envelope` field present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub ambient: Ambient,
    pub basis: Vec<MatrixJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<EnvelopeJson>,
}

/// `tensor[i][j][k]` is the coefficient of `F_k` in `m(F_i, F_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductFile {
    pub tensor: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Images `u(F_k)` of the basis under a linear map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapFile {
    pub images: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub matrix: MatrixJson,
}

pub fn to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_json(m: &MatrixJson, what: &str) -> Result<ComplexMatrix, CliError> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(CliError::Input(format!("{what}: empty matrix")));
    }
    if let Some(i) = m.iter().position(|r| r.len() != cols) {
        return Err(CliError::Input(format!("{what}: row {i} has {} entries, expected {cols}", m[i].len())));
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

fn from_json_list(list: &[MatrixJson], what: &str) -> Result<Vec<ComplexMatrix>, CliError> {
    list.iter()
        .enumerate()
        .map(|(k, m)| from_json(m, &format!("{what}[{k}]")))
        .collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn depth(v: &Value) -> usize {
    match v {
        Value::Array(a) => 1 + a.iter().map(depth).max().unwrap_or(0),
        Value::Object(o) => 1 + o.values().map(depth).max().unwrap_or(0),
        _ => 0,
    }
}

fn pretty_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Array(a) if depth(v) > 2 && !a.is_empty() => {
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                out.push_str(&pad);
                pretty_into(x, indent + 1, out);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(o) if !o.is_empty() => {
            out.push_str("{\n");
            for (i, (k, x)) in o.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                pretty_into(x, indent + 1, out);
                out.push_str(if i + 1 < o.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        _ => out.push_str(&inline(v)),
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::Array(a) => format!("[{}]", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        _ => v.to_string(),
    }
}

/// Indented JSON with every matrix row on one line.
pub fn pretty<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable");
    let mut out = String::new();
    pretty_into(&v, 0, &mut out);
    out + "\n"
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    std::fs::write(path, pretty(value)).map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

impl SpaceFile {
    pub fn from_space(x: &OperatorSpace) -> Self {
        let (rows, cols) = x.ambient();
        Self {
            ambient: Ambient { rows, cols },
            basis: x.basis().iter().map(to_json).collect(),
            envelope: None,
        }
    }

    pub fn from_envelope(env: &EnvelopeEmbedding) -> Self {
        let n = env.size();
        let (n1, n2) = env.split();
        Self {
            ambient: Ambient { rows: n, cols: n },
            basis: env.x().basis().iter().map(to_json).collect(),
            envelope: Some(EnvelopeJson {
                n1,
                n2,
                i11: env.i11().generators().iter().map(to_json).collect(),
                i22: env.i22().generators().iter().map(to_json).collect(),
                ix: env.ix().generators().iter().map(to_json).collect(),
            }),
        }
    }

    fn basis_matrices(&self, what: &str) -> Result<Vec<ComplexMatrix>, CliError> {
        let basis = from_json_list(&self.basis, &format!("{what} basis"))?;
        for (k, b) in basis.iter().enumerate() {
            if b.shape() != (self.ambient.rows, self.ambient.cols) {
                return Err(CliError::Input(format!(
                    "{what} basis[{k}] is {}×{}, ambient is {}×{}",
                    b.nrows(),
                    b.ncols(),
                    self.ambient.rows,
                    self.ambient.cols
                )));
            }
        }
        Ok(basis)
    }

    pub fn to_space(&self, tol: &Tolerances) -> Result<OperatorSpace, CliError> {
        let basis = self.basis_matrices("space")?;
        Ok(OperatorSpace::new(self.ambient.rows, self.ambient.cols, basis, tol)?)
    }

    pub fn to_envelope(&self, tol: &Tolerances) -> Result<EnvelopeEmbedding, CliError> {
        let env = self
            .envelope
            .as_ref()
            .ok_or_else(|| CliError::Input("envelope file has no `envelope` field".into()))?;
        if self.ambient.rows != self.ambient.cols || self.ambient.rows != env.n1 + env.n2 {
            return Err(CliError::Input(format!(
                "envelope ambient {}×{} does not match n1 + n2 = {}",
                self.ambient.rows,
                self.ambient.cols,
                env.n1 + env.n2
            )));
        }
        let basis = self.basis_matrices("envelope")?;
        Ok(EnvelopeEmbedding::new(
            env.n1,
            env.n2,
            basis,
            &from_json_list(&env.i11, "i11")?,
            &from_json_list(&env.i22, "i22")?,
            &from_json_list(&env.ix, "ix")?,
            tol,
        )?)
    }
}

impl ProductFile {
    pub fn from_product(m: &BilinearProduct) -> Self {
        let d = m.dim();
        Self {
            tensor: (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| [m.coeff(i, j, k).re, m.coeff(i, j, k).im]).collect())
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_product(&self) -> Result<BilinearProduct, CliError> {
        let d = self.tensor.len();
        let mut flat = Vec::with_capacity(d * d * d);
        for (i, plane) in self.tensor.iter().enumerate() {
            if plane.len() != d {
                return Err(CliError::Input(format!("tensor[{i}] has length {}, expected {d}", plane.len())));
            }
            for (j, row) in plane.iter().enumerate() {
                if row.len() != d {
                    return Err(CliError::Input(format!("tensor[{i}][{j}] has length {}, expected {d}", row.len())));
                }
                flat.extend(row.iter().map(|c| C64::new(c[0], c[1])));
            }
        }
        Ok(BilinearProduct::from_tensor(d, flat)?)
    }
}

impl MapFile {
    pub fn to_images(&self) -> Result<Vec<ComplexMatrix>, CliError> {
        if self.images.is_empty() {
            return Err(CliError::Input("map file has no images".into()));
        }
        from_json_list(&self.images, "images")
    }
}

pub fn read_space(path: &Path, tol: &Tolerances) -> Result<OperatorSpace, CliError> {
    read_json::<SpaceFile>(path)?.to_space(tol)
}

pub fn read_envelope(path: &Path, tol: &Tolerances) -> Result<EnvelopeEmbedding, CliError> {
    read_json::<SpaceFile>(path)?.to_envelope(tol)
}

pub fn read_product(path: &Path) -> Result<BilinearProduct, CliError> {
    read_json::<ProductFile>(path)?.to_product()
}

pub fn read_map(path: &Path) -> Result<Vec<ComplexMatrix>, CliError> {
    read_json::<MapFile>(path)?.to_images()
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, CliError> {
    from_json(&read_json::<MatrixFile>(path)?.matrix, "matrix")
}

#[cfg(test)]
mod tests {
    use super::*;
    use quasimult::catalog::catalog;

    #[test]
    fn files_round_trip() {
        let tol = Tolerances::default();
        let f = catalog("sharp", &tol).unwrap();
        let space = SpaceFile::from_space(&f.space);
        let text = serde_json::to_string(&space).unwrap();
        let back: SpaceFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, space);
        let back: SpaceFile = serde_json::from_str(&pretty(&space)).unwrap();
        assert_eq!(back, space);
        let x = back.to_space(&tol).unwrap();
        for (a, b) in x.basis().iter().zip(f.space.basis()) {
            assert_eq!(a, b);
        }
        let env = SpaceFile::from_envelope(f.envelope.as_ref().unwrap());
        let e2 = env.to_envelope(&tol).unwrap();
        assert_eq!(e2.split(), (3, 3));
        let prod = ProductFile::from_product(f.product("m_Z").unwrap());
        assert_eq!(prod.to_product().unwrap().max_abs_diff(f.product("m_Z").unwrap()), 0.0);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let ragged: MatrixJson = vec![vec![[1.0, 0.0], [0.0, 0.0]], vec![[1.0, 0.0]]];
        assert!(matches!(from_json(&ragged, "m"), Err(CliError::Input(_))));
        let prod = ProductFile {
            tensor: vec![vec![vec![[1.0, 0.0]], vec![]]],
        };
        assert!(prod.to_product().is_err());
        let no_env = SpaceFile {
            ambient: Ambient { rows: 1, cols: 1 },
            basis: vec![vec![vec![[1.0, 0.0]]]],
            envelope: None,
        };
        assert!(no_env.to_envelope(&Tolerances::default()).is_err());
    }
}
