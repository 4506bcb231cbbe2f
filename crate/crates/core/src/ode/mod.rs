//! Explicit embedded Runge–Kutta pairs and the adaptive driver that runs them.
//!
//! Each pair is a strategy behind [`EmbeddedPair`]; the built-in ones are
//! registered by name in a [`MethodRegistry`] and picked at runtime from the
//! integrator configuration.

mod integrator;
mod tableaus;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

pub use integrator::{Integrator, StepControl, VectorField};
pub use tableaus::{CashKarp45, DormandPrince54, Fehlberg45};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("unknown integration method {name:?} (available: {available})")]
    UnknownMethod { name: String, available: String },
}

/// Butcher tableau of an explicit embedded pair.
///
/// `b` advances the solution; `b_hat` is the embedded companion used only
/// for the local error estimate.
#[derive(Debug)]
pub struct Tableau {
    pub c: &'static [f64],
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    pub b_hat: &'static [f64],
    /// Order of the propagated solution.
    pub order: u32,
    /// Order of the embedded solution.
    pub embedded_order: u32,
}

impl Tableau {
    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// Exponent denominator for step-size control.
    pub(crate) fn control_order(&self) -> u32 {
        self.order.min(self.embedded_order) + 1
    }
}

pub trait EmbeddedPair: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn tableau(&self) -> &'static Tableau;
}

/// Name → method lookup for embedded pairs.
#[derive(Debug, Clone, Default)]
pub struct MethodRegistry {
    methods: BTreeMap<&'static str, Arc<dyn EmbeddedPair>>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register(Arc::new(DormandPrince54));
        reg.register(Arc::new(Fehlberg45));
        reg.register(Arc::new(CashKarp45));
        reg
    }

    pub fn register(&mut self, method: Arc<dyn EmbeddedPair>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn EmbeddedPair>, OdeError> {
        self.methods.get(name).cloned().ok_or_else(|| OdeError::UnknownMethod {
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

/// The process-wide registry of built-in methods.
pub fn registry() -> &'static MethodRegistry {
    static REGISTRY: OnceLock<MethodRegistry> = OnceLock::new();
    REGISTRY.get_or_init(MethodRegistry::with_builtins)
}

pub const DEFAULT_METHOD: &str = "dopri5";
