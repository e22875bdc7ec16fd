//! JSON serialization for the discrete parameter pack.
//!
//! Schema: the dimensions first, then one flat row-major array per block;
//! the dense-connection families keep only their lower triangle, stored as
//! rows l = 1..L of k = 1..l blocks. Round-trips are exact: serde_json
//! prints the shortest decimal that recovers each f64 bit pattern.

use serde::{Deserialize, Serialize};

use crate::discrete::{DiscreteParams, Triangular};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    n: usize,
    layers: usize,
    t1: Vec<Vec<f64>>,
    t2: Vec<Vec<f64>>,
    t3: Vec<Vec<f64>>,
    u: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    w: Vec<Vec<Vec<f64>>>,
    c: Vec<Vec<Vec<f64>>>,
}

fn matrices_to_doc(seq: &[Matrix]) -> Vec<Vec<f64>> {
    seq.iter().map(|m| m.as_slice().to_vec()).collect()
}

fn vectors_to_doc(seq: &[Vector]) -> Vec<Vec<f64>> {
    seq.iter().map(|v| v.as_slice().to_vec()).collect()
}

fn matrices_from_doc(doc: Vec<Vec<f64>>, n: usize, expected: usize, name: &str) -> Result<Vec<Matrix>> {
    if doc.len() != expected {
        return Err(Error::Serialization(format!(
            "{name}: expected {expected} blocks, got {}",
            doc.len()
        )));
    }
    doc.into_iter()
        .map(|flat| {
            if flat.len() != n * n {
                return Err(Error::Serialization(format!(
                    "{name}: block has {} entries, expected {}",
                    flat.len(),
                    n * n
                )));
            }
            Ok(Matrix::new(n, flat))
        })
        .collect()
}

fn vectors_from_doc(doc: Vec<Vec<f64>>, n: usize, expected: usize, name: &str) -> Result<Vec<Vector>> {
    if doc.len() != expected {
        return Err(Error::Serialization(format!(
            "{name}: expected {expected} blocks, got {}",
            doc.len()
        )));
    }
    doc.into_iter()
        .map(|flat| {
            if flat.len() != n {
                return Err(Error::Serialization(format!(
                    "{name}: block has {} entries, expected {n}",
                    flat.len()
                )));
            }
            Ok(Vector::new(flat))
        })
        .collect()
}

impl DiscreteParams {
    pub fn to_json_string(&self) -> Result<String> {
        let doc = ParamsDoc {
            n: self.n,
            layers: self.layers,
            t1: matrices_to_doc(&self.t1),
            t2: matrices_to_doc(&self.t2),
            t3: matrices_to_doc(&self.t3),
            u: matrices_to_doc(&self.u),
            a: vectors_to_doc(&self.a),
            v: matrices_to_doc(&self.v),
            b: vectors_to_doc(&self.b),
            w: self
                .w
                .rows()
                .iter()
                .map(|row| row.iter().map(|m| m.as_slice().to_vec()).collect())
                .collect(),
            c: self
                .c
                .rows()
                .iter()
                .map(|row| row.iter().map(|v| v.as_slice().to_vec()).collect())
                .collect(),
        };
        serde_json::to_string(&doc).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: ParamsDoc =
            serde_json::from_str(json).map_err(|e| Error::Serialization(e.to_string()))?;
        let (n, layers) = (doc.n, doc.layers);
        if n < 1 || layers < 1 {
            return Err(Error::Serialization("dims must be >= 1".into()));
        }
        if doc.w.len() != layers || doc.c.len() != layers {
            return Err(Error::Serialization(format!(
                "triangle must have {layers} rows"
            )));
        }
        let mut w_rows = Vec::with_capacity(layers);
        for (i, row) in doc.w.into_iter().enumerate() {
            w_rows.push(matrices_from_doc(row, n, i + 1, "w")?);
        }
        let mut c_rows = Vec::with_capacity(layers);
        for (i, row) in doc.c.into_iter().enumerate() {
            c_rows.push(vectors_from_doc(row, n, i + 1, "c")?);
        }
        Ok(DiscreteParams {
            n,
            layers,
            t1: matrices_from_doc(doc.t1, n, layers + 1, "t1")?,
            t2: matrices_from_doc(doc.t2, n, layers + 1, "t2")?,
            t3: matrices_from_doc(doc.t3, n, layers + 1, "t3")?,
            u: matrices_from_doc(doc.u, n, layers + 1, "u")?,
            a: vectors_from_doc(doc.a, n, layers + 1, "a")?,
            v: matrices_from_doc(doc.v, n, layers + 1, "v")?,
            b: vectors_from_doc(doc.b, n, layers + 1, "b")?,
            w: Triangular::from_rows(w_rows),
            c: Triangular::from_rows(c_rows),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn json_round_trip_is_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let params = DiscreteParams::random_uniform(3, 5, 0.9, &mut rng);
        let json = params.to_json_string().unwrap();
        let back = DiscreteParams::from_json_str(&json).unwrap();
        assert_eq!(params, back);
        // Bit-exact, not just approximately equal.
        assert_eq!(params.to_flat(), back.to_flat());
    }

    #[test]
    fn json_rejects_malformed_triangle() {
        let params = DiscreteParams::zeros(2, 2);
        let json = params.to_json_string().unwrap();
        let broken = json.replace("\"layers\":2", "\"layers\":3");
        assert!(DiscreteParams::from_json_str(&broken).is_err());
    }
}
