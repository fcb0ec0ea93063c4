use serde::{Deserialize, Serialize};

use crate::diagnostics::Quantity;
use crate::error::{Error, Result};
use crate::operators::CellField;
use crate::thermo::{pressure, temperature_from_rho_s, GasLaw};

/// Eigenvalues `l1 <= l2` of `[[a11, a12], [a12, a22]]`.
pub fn sym_eigen(a11: f64, a12: f64, a22: f64) -> (f64, f64) {
    let mid = 0.5 * (a11 + a22);
    let r = (0.5 * (a11 - a22)).hypot(a12);
    (mid - r, mid + r)
}

/// Scalar defect fields reported by the error family `E4`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DefectKind {
    R11,
    R12,
    R22,
    Energy,
    Trace,
    Lambda1,
    Lambda2,
}

impl DefectKind {
    pub const ALL: [DefectKind; 7] = [
        DefectKind::R11,
        DefectKind::R12,
        DefectKind::R22,
        DefectKind::Energy,
        DefectKind::Trace,
        DefectKind::Lambda1,
        DefectKind::Lambda2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefectKind::R11 => "R11",
            DefectKind::R12 => "R12",
            DefectKind::R22 => "R22",
            DefectKind::Energy => "energy_fluctuation",
            DefectKind::Trace => "trace",
            DefectKind::Lambda1 => "lambda1",
            DefectKind::Lambda2 => "lambda2",
        }
    }
}

/// Reynolds stress `R` (symmetric) and energy fluctuation per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectFields {
    pub r11: CellField,
    pub r12: CellField,
    pub r22: CellField,
    pub energy: CellField,
    pub trace: CellField,
    pub lambda1: CellField,
    pub lambda2: CellField,
}

impl DefectFields {
    pub fn get(&self, kind: DefectKind) -> &CellField {
        match kind {
            DefectKind::R11 => &self.r11,
            DefectKind::R12 => &self.r12,
            DefectKind::R22 => &self.r22,
            DefectKind::Energy => &self.energy,
            DefectKind::Trace => &self.trace,
            DefectKind::Lambda1 => &self.lambda1,
            DefectKind::Lambda2 => &self.lambda2,
        }
    }

    /// Frobenius norm of `R` per cell.
    pub fn frobenius(&self) -> CellField {
        CellField::from_vec(
            (0..self.r11.len())
                .map(|k| {
                    let (a, b, c) = (self.r11[k], self.r12[k], self.r22[k]);
                    (a * a + 2.0 * b * b + c * c).sqrt()
                })
                .collect(),
        )
    }
}

/// `R = mean(m (x) m / rho + p I) - (mean m (x) mean m / mean rho + p(mean rho, mean S) I)` and
/// `mean E - E(mean rho, mean m, mean S)`, from the temporal means of the recorded fields.
pub fn reynolds_defect(means: &[CellField], law: &GasLaw) -> Result<DefectFields> {
    let q = |x: Quantity| &means[x.index()];
    let n = q(Quantity::Rho).len();
    let mut f: [Vec<f64>; 7] = Default::default();
    for k in 0..n {
        let rho = q(Quantity::Rho)[k];
        if !(rho > 0.0) {
            return Err(Error::domain(format!("mean density {rho} at cell {k} is not positive")));
        }
        let m = [q(Quantity::M1)[k], q(Quantity::M2)[k]];
        let th = temperature_from_rho_s(rho, q(Quantity::S)[k], law)?;
        let p = pressure(rho, th)?;
        let r11 = q(Quantity::R11)[k] - (m[0] * m[0] / rho + p);
        let r12 = q(Quantity::R12)[k] - m[0] * m[1] / rho;
        let r22 = q(Quantity::R22)[k] - (m[1] * m[1] / rho + p);
        let e = q(Quantity::E)[k] - (0.5 * (m[0] * m[0] + m[1] * m[1]) / rho + law.c_v() * rho * th);
        let (l1, l2) = sym_eigen(r11, r12, r22);
        for (v, x) in f.iter_mut().zip([r11, r12, r22, e, r11 + r22, l1, l2]) {
            v.push(x);
        }
    }
    let [r11, r12, r22, energy, trace, lambda1, lambda2] = f.map(CellField::from_vec);
    Ok(DefectFields {
        r11,
        r12,
        r22,
        energy,
        trace,
        lambda1,
        lambda2,
    })
}
