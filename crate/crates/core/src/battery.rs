//! Linear and non-linear storage laws.
//!
//! The non-linear battery has efficiency `η(U) = 1 − ((U − a)/b)²` with
//! `a = U_max/2` and `b = β·U_max/2`. Integrating `dU/dX = η(U)` from an empty
//! battery gives the stored energy as a function of cumulative input,
//! `U = a + b·tanh((X − C)/b)` with `C = b·artanh(1/β)`.

use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonLinearBattery {
    capacity: f64,
    beta: f64,
    #[serde(skip)]
    a: f64,
    #[serde(skip)]
    b: f64,
    #[serde(skip)]
    c: f64,
}

impl NonLinearBattery {
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Level of peak efficiency, `U_max / 2`.
    pub fn center(&self) -> f64 {
        self.a
    }

    /// Half-width of the efficiency parabola, `β·U_max / 2`.
    pub fn half_width(&self) -> f64 {
        self.b
    }

    /// Input energy needed to reach the peak-efficiency level, `b·artanh(1/β)`.
    pub fn offset(&self) -> f64 {
        self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatteryModel {
    /// Unit efficiency. `capacity: None` means unbounded storage.
    Linear {
        capacity: Option<f64>,
    },
    NonLinear(NonLinearBattery),
}

impl Default for BatteryModel {
    fn default() -> Self {
        BatteryModel::Linear { capacity: None }
    }
}

impl BatteryModel {
    pub fn linear() -> Self {
        BatteryModel::Linear { capacity: None }
    }

    pub fn linear_with_capacity(capacity: f64) -> Result<Self> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::invalid(
                "umax",
                format!("must be finite and > 0, got {capacity}"),
            ));
        }
        Ok(BatteryModel::Linear {
            capacity: Some(capacity),
        })
    }

    pub fn nonlinear(capacity: f64, beta: f64) -> Result<Self> {
        if !(capacity > 0.0 && capacity.is_finite()) {
            return Err(Error::invalid(
                "umax",
                format!("must be finite and > 0, got {capacity}"),
            ));
        }
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::invalid(
                "beta",
                format!("must be finite and > 1, got {beta}"),
            ));
        }
        let a = 0.5 * capacity;
        let b = beta * a;
        let c = b * (1.0 / beta).atanh();
        Ok(BatteryModel::NonLinear(NonLinearBattery {
            capacity,
            beta,
            a,
            b,
            c,
        }))
    }

    pub fn capacity(&self) -> Option<f64> {
        match self {
            BatteryModel::Linear { capacity } => *capacity,
            BatteryModel::NonLinear(n) => Some(n.capacity),
        }
    }

    fn cap(&self) -> f64 {
        self.capacity().unwrap_or(f64::INFINITY)
    }

    fn check_level(&self, energy: f64) -> Result<()> {
        if energy >= 0.0 && energy <= self.cap() {
            Ok(())
        } else {
            Err(Error::Domain {
                value: energy,
                domain: format!("[0, {}]", self.cap()),
            })
        }
    }

    /// Conversion efficiency at stored energy `energy`.
    pub fn efficiency(&self, energy: f64) -> Result<f64> {
        self.check_level(energy)?;
        Ok(self.efficiency_unchecked(energy))
    }

    fn efficiency_unchecked(&self, energy: f64) -> f64 {
        match self {
            BatteryModel::Linear { .. } => 1.0,
            BatteryModel::NonLinear(n) => {
                let z = (energy - n.a) / n.b;
                1.0 - z * z
            }
        }
    }

    /// Stored energy after a cumulative input `input`, integrating the
    /// efficiency continuously. Saturates at the capacity.
    pub fn stored_from_input(&self, input: f64) -> f64 {
        if input <= 0.0 {
            return 0.0;
        }
        match self {
            BatteryModel::Linear { .. } => input.min(self.cap()),
            BatteryModel::NonLinear(n) => {
                (n.a + n.b * ((input - n.c) / n.b).tanh()).clamp(0.0, n.capacity)
            }
        }
    }

    /// Cumulative input needed to bring the stored energy to `level`.
    ///
    /// For a linear battery this is `level` itself; a non-linear battery maps
    /// `u` to `u' = C + b·artanh((u − a)/b)`.
    pub fn input_for_level(&self, level: f64) -> Result<f64> {
        if !(level > 0.0) {
            return Err(Error::Domain {
                value: level,
                domain: "(0, capacity]".into(),
            });
        }
        match self {
            BatteryModel::Linear { .. } => {
                self.check_level(level)?;
                Ok(level)
            }
            BatteryModel::NonLinear(n) => {
                if level >= n.a + n.b {
                    return Err(Error::UnreachableThreshold {
                        threshold: level,
                        reason: format!("stored energy never reaches a + b = {}", n.a + n.b),
                    });
                }
                self.check_level(level)?;
                Ok(n.c + n.b * ((level - n.a) / n.b).atanh())
            }
        }
    }

    /// Per-packet update `U ← min(U + η(U)·X, U_max)` with `η` taken at the
    /// pre-packet level.
    pub fn step_update(&self, energy: f64, packet: f64) -> f64 {
        let energy = energy.clamp(0.0, self.cap());
        (energy + self.efficiency_unchecked(energy) * packet).min(self.cap())
    }

    /// True when the stored energy can strictly exceed `level`.
    pub fn can_exceed(&self, level: f64) -> bool {
        level < self.cap()
    }
}
