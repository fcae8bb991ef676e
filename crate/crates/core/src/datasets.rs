//! Built-in inputs: the amino-acid and drug-combination codes, and the
//! viewing-sphere image grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassificationMatrix, PairClass};

const TABLE1_LABELS: [&str; 13] = ["A", "C", "D", "E", "G", "H", "I", "K", "L", "M", "N", "Q", "R"];

const TABLE1_CODES: [&[i8]; 13] = [
    &[],
    &[0],
    &[-1, 0],
    &[-1, 0, -1],
    &[0, 0, -1, 1],
    &[0, 0, -1, 0, -1],
    &[0, 0, 0, 0, 0, 1],
    &[1, 0, 1, -1, 0, 0, 0],
    &[0, 0, -1, 0, 0, -1, 0, 0],
    &[0, 0, -1, 1, -1, 1, 1, -1, -1],
    &[0, 0, -1, -1, -1, 1, 1, 0, -1, 0],
    &[0, 0, 1, 0, -1, 1, 0, -1, 0, 0, 1],
    &[0, 0, -1, 0, 0, -1, 0, -1, 0, 0, -1, 1],
];

const TABLE2_LABELS: [&str; 13] = [
    "DYC", "FEN", "HAL", "PEN", "TAC", "TER", "LAT", "BEN", "STA", "RAP", "TUN", "CAL", "BRO",
];

const TABLE2_CODES: [&[i8]; 13] = [
    &[],
    &[1],
    &[1, 0],
    &[-1, -1, -1],
    &[0, -1, -1, -1],
    &[-1, -1, -1, -1, -1],
    &[-1, -1, -1, -1, -1, -1],
    &[1, 0, 0, -1, -1, 0, 1],
    &[-1, -1, -1, -1, -1, -1, 1, 1],
    &[0, -1, 0, 0, 1, -1, 0, 0, 0],
    &[1, 1, 1, 0, 0, 0, 0, 0, 0, 1],
    &[-1, -1, -1, -1, 0, -1, 1, 1, 1, 1, 0],
    &[1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
];

/// Thirteen amino acids, classified by contact propensity.
pub fn table1() -> ClassificationMatrix {
    ClassificationMatrix::from_lower_codes(&TABLE1_LABELS, &TABLE1_CODES).expect("well-formed codes")
}

/// Thirteen anticancer drugs, classified by combination synergy.
pub fn table2() -> ClassificationMatrix {
    ClassificationMatrix::from_lower_codes(&TABLE2_LABELS, &TABLE2_CODES).expect("well-formed codes")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Neighborhood {
    /// Same elevation and adjacent azimuth, or same azimuth and adjacent elevation.
    Four,
    /// Also counts cells that differ by one step in both directions.
    Eight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub elevations: usize,
    pub azimuths: usize,
    pub wrap_azimuth: bool,
    pub neighborhood: Neighborhood,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            elevations: 5,
            azimuths: 18,
            wrap_azimuth: true,
            neighborhood: Neighborhood::Four,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.elevations < 2 {
            return Err(Error::Spec(format!("need at least 2 elevations, got {}", self.elevations)));
        }
        if self.azimuths < 3 {
            return Err(Error::Spec(format!("need at least 3 azimuths, got {}", self.azimuths)));
        }
        Ok(())
    }

    /// Object index of cell `(e, a)`.
    pub fn index(&self, e: usize, a: usize) -> usize {
        e * self.azimuths + a
    }

    /// Cell `(e, a)` of an object index.
    pub fn cell(&self, idx: usize) -> (usize, usize) {
        (idx / self.azimuths, idx % self.azimuths)
    }

    fn azimuth_step(&self, a1: usize, a2: usize) -> usize {
        let d = a1.abs_diff(a2);
        if self.wrap_azimuth {
            d.min(self.azimuths - d)
        } else {
            d
        }
    }

    pub fn similar(&self, i: usize, j: usize) -> bool {
        let (e1, a1) = self.cell(i);
        let (e2, a2) = self.cell(j);
        let de = e1.abs_diff(e2);
        let da = self.azimuth_step(a1, a2);
        match self.neighborhood {
            Neighborhood::Four => de + da == 1,
            Neighborhood::Eight => de <= 1 && da <= 1 && de + da > 0,
        }
    }
}

/// One object per grid cell; neighbouring cells are Above, all others Below.
pub fn imaging(spec: &GridSpec) -> Result<ClassificationMatrix> {
    spec.validate()?;
    let n = spec.elevations * spec.azimuths;
    let labels = (0..n)
        .map(|k| {
            let (e, a) = spec.cell(k);
            format!("e{e}a{a:02}")
        })
        .collect();
    Ok(ClassificationMatrix::from_fn(labels, |i, j| {
        if spec.similar(i, j) {
            PairClass::Above
        } else {
            PairClass::Below
        }
    }))
}
