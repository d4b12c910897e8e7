//! Built-in benchmark systems and TOML fixture files.
//!
//! `system-a` is a second-order two-input single-output plant that is
//! open-loop unstable; `system-b` is a fourth-order two-input two-output
//! stable plant. Custom fixtures load from a TOML file whose keys mirror the
//! model symbols (`A`, `B`, `C`, `Q`, `R`, `W`, `U`, `A_a`, `Q_a`, `rho`),
//! matrices written as row-major bracketed lists of rows.

use nalgebra::{dmatrix, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AttackModel, SystemModel};

pub const DEFAULT_RHO: f64 = 0.001;

/// Second-order unstable plant, scalar measurement channel.
pub fn system_a() -> Result<(SystemModel, AttackModel)> {
    let a = dmatrix![0.75, 0.2; 0.2, 1.0];
    let b = dmatrix![0.9, 0.5; 0.1, 1.2];
    let c = dmatrix![1.0, -1.0];
    let q = DMatrix::identity(2, 2);
    let r = dmatrix![1.0];
    let w = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 2.0]);
    let u = DMatrix::from_diagonal(&nalgebra::dvector![0.4, 0.7]);
    let model = SystemModel::new(a, b, c, q, r, w, u)?;
    let attack = AttackModel::new(dmatrix![0.5], dmatrix![7.5], DEFAULT_RHO)?;
    Ok((model, attack))
}

/// Fourth-order stable plant with two measurement channels.
///
/// The attacker transition is the 2x2 matrix [[0.4, 0.1], [0.1, 0.7]]; the
/// published four-entry list is read row-major into the m x m transition
/// required by the two-channel spoofed output.
pub fn system_b() -> Result<(SystemModel, AttackModel)> {
    let a = dmatrix![
        0.968, 0.0, 0.082, 0.0;
        0.0, 0.978, 0.0, 0.064;
        0.0, 0.0, 0.917, 0.0;
        0.0, 0.0, 0.0, 0.935];
    let b = dmatrix![
        0.164, 0.004;
        0.002, 0.124;
        0.0, 0.092;
        0.060, 0.0];
    let c = dmatrix![
        5.0, 0.0, 0.0, 0.0;
        0.0, 5.0, 0.0, 0.0];
    let q = DMatrix::identity(4, 4) * 0.25;
    let r = DMatrix::identity(2, 2) * 0.5;
    let w = DMatrix::from_diagonal(&nalgebra::dvector![5.0, 5.0, 1.0, 1.0]);
    let u = DMatrix::identity(2, 2) * 2.0;
    let model = SystemModel::new(a, b, c, q, r, w, u)?;
    let a_a = dmatrix![0.4, 0.1; 0.1, 0.7];
    let q_a = DMatrix::identity(2, 2) * 6.0;
    let attack = AttackModel::new(a_a, q_a, DEFAULT_RHO)?;
    Ok((model, attack))
}

/// Load a fixture by identifier: `system-a`, `system-b`, or a path to a
/// TOML fixture file.
pub fn load_fixture(id: &str) -> Result<(SystemModel, AttackModel)> {
    match id {
        "system-a" => system_a(),
        "system-b" => system_b(),
        path => load_fixture_file(std::path::Path::new(path)),
    }
}

/// On-disk fixture schema; keys mirror the model symbol names.
#[derive(Debug, Serialize, Deserialize)]
pub struct FixtureFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<f64>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(rename = "U")]
    pub u: Vec<Vec<f64>>,
    #[serde(rename = "A_a")]
    pub a_a: Vec<Vec<f64>>,
    #[serde(rename = "Q_a")]
    pub q_a: Vec<Vec<f64>>,
    pub rho: f64,
}

pub(crate) fn rows_to_matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Config(format!("matrix {name} has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!("matrix {name} has ragged or empty rows")));
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

pub(crate) fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn load_fixture_file(path: &std::path::Path) -> Result<(SystemModel, AttackModel)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read fixture {}: {e}", path.display()))
    })?;
    let file: FixtureFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("fixture {}: {e}", path.display())))?;
    let model = SystemModel::new(
        rows_to_matrix("A", &file.a)?,
        rows_to_matrix("B", &file.b)?,
        rows_to_matrix("C", &file.c)?,
        rows_to_matrix("Q", &file.q)?,
        rows_to_matrix("R", &file.r)?,
        rows_to_matrix("W", &file.w)?,
        rows_to_matrix("U", &file.u)?,
    )?;
    let attack = AttackModel::new(
        rows_to_matrix("A_a", &file.a_a)?,
        rows_to_matrix("Q_a", &file.q_a)?,
        file.rho,
    )?;
    if attack.m() != model.m() {
        return Err(Error::Dimension(format!(
            "A_a is {}x{} but the plant has {} outputs",
            attack.a_a.nrows(),
            attack.a_a.ncols(),
            model.m()
        )));
    }
    Ok((model, attack))
}

/// Serialize a model/attack pair into the fixture file schema.
pub fn to_fixture_file(model: &SystemModel, attack: &AttackModel) -> FixtureFile {
    FixtureFile {
        a: matrix_to_rows(&model.a),
        b: matrix_to_rows(&model.b),
        c: matrix_to_rows(&model.c),
        q: matrix_to_rows(&model.q),
        r: matrix_to_rows(&model.r),
        w: matrix_to_rows(&model.w),
        u: matrix_to_rows(&model.u),
        a_a: matrix_to_rows(&attack.a_a),
        q_a: matrix_to_rows(&attack.q_a),
        rho: attack.rho,
    }
}

/// Stable content hash of the model + attack parameters, for embedding in
/// result files. FNV-1a over an exact textual rendering of every entry.
pub fn model_hash(model: &SystemModel, attack: &AttackModel) -> String {
    let mut text = String::new();
    for m in [
        &model.a, &model.b, &model.c, &model.q, &model.r, &model.w, &model.u, &attack.a_a,
        &attack.q_a,
    ] {
        for v in m.iter() {
            text.push_str(&format!("{v:.17e};"));
        }
        text.push('|');
    }
    text.push_str(&format!("{:.17e}", attack.rho));
    format!("{:016x}", fnv1a(text.as_bytes()))
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
