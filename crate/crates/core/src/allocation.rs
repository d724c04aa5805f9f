use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fronthaul bits per AP–UE link, stored AP-major (`b[m][k]` at `m * K + k`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitAllocation {
    num_aps: usize,
    num_ues: usize,
    bits: Vec<u32>,
}

impl BitAllocation {
    pub fn zeros(num_aps: usize, num_ues: usize) -> Self {
        Self {
            num_aps,
            num_ues,
            bits: vec![0; num_aps * num_ues],
        }
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let num_aps = rows.len();
        let num_ues = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != num_ues) {
            return Err(Error::Infeasible("ragged allocation rows".into()));
        }
        Ok(Self {
            num_aps,
            num_ues,
            bits: rows.concat(),
        })
    }

    pub fn from_flat(num_aps: usize, num_ues: usize, bits: Vec<u32>) -> Result<Self> {
        if bits.len() != num_aps * num_ues {
            return Err(Error::Infeasible(format!(
                "expected {} entries, got {}",
                num_aps * num_ues,
                bits.len()
            )));
        }
        Ok(Self {
            num_aps,
            num_ues,
            bits,
        })
    }

    /// Every UE of AP `m` gets `ap_bits[m]`.
    pub fn from_ap_bits(ap_bits: &[u32], num_ues: usize) -> Self {
        let bits = ap_bits
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, num_ues))
            .collect();
        Self {
            num_aps: ap_bits.len(),
            num_ues,
            bits,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn get(&self, m: usize, k: usize) -> u32 {
        self.bits[m * self.num_ues + k]
    }

    pub fn set(&mut self, m: usize, k: usize, bits: u32) {
        self.bits[m * self.num_ues + k] = bits;
    }

    pub fn row(&self, m: usize) -> &[u32] {
        &self.bits[m * self.num_ues..(m + 1) * self.num_ues]
    }

    pub fn set_row(&mut self, m: usize, row: &[u32]) {
        self.bits[m * self.num_ues..(m + 1) * self.num_ues].copy_from_slice(row);
    }

    /// Bits of UE `k` across all APs.
    pub fn column(&self, k: usize) -> Vec<u32> {
        (0..self.num_aps).map(|m| self.get(m, k)).collect()
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.bits
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.bits.chunks(self.num_ues.max(1)).map(<[u32]>::to_vec).collect()
    }

    pub fn total(&self) -> u64 {
        self.bits.iter().map(|&b| u64::from(b)).sum()
    }

    pub fn ap_total(&self, m: usize) -> u64 {
        self.row(m).iter().map(|&b| u64::from(b)).sum()
    }

    /// The per-AP vector when every UE of each AP shares the same bits.
    pub fn ap_view(&self) -> Option<Vec<u32>> {
        (0..self.num_aps)
            .map(|m| {
                let row = self.row(m);
                let first = *row.first()?;
                row.iter().all(|&b| b == first).then_some(first)
            })
            .collect()
    }

    /// Check the total budget and the per-link cap.
    pub fn check_feasible(&self, budget: u32, max_bits: u32) -> Result<()> {
        if let Some(&b) = self.bits.iter().find(|&&b| b > max_bits) {
            return Err(Error::Infeasible(format!(
                "link carries {b} bits, above max_bits {max_bits}"
            )));
        }
        if self.total() > u64::from(budget) {
            return Err(Error::Infeasible(format!(
                "allocation uses {} bits, budget is {budget}",
                self.total()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BitAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .to_rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

/// Scalar the allocator maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Sum of per-UE spectral efficiencies.
    #[serde(alias = "total_se")]
    Total,
    /// Minimum per-UE spectral efficiency (max-min fairness).
    #[serde(alias = "maxmin_se")]
    MaxMin,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Total => "total",
            Objective::MaxMin => "maxmin",
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "total" | "total_se" | "sum" => Ok(Objective::Total),
            "maxmin" | "max-min" | "min" | "maxmin_se" => Ok(Objective::MaxMin),
            other => Err(Error::InvalidConfig(format!("unknown objective `{other}`"))),
        }
    }
}
