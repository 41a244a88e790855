//! Restricted distance of an apex through a simplex, with memoization.
//!
//! The unrestricted extrapolated distance is only meaningful when the ray
//! from the virtual source to the apex actually crosses the opposite face.
//! When some crossing weight is negative the ray misses, and the answer is
//! the best over the faces on the negative side, computed recursively.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Embedding, GeometryError, Method, EPS_WEIGHT};
use crate::graph::{MetricGraph, VertexId};
use crate::rips::Simplex;

/// Pairwise distances between the vertices of the simplices being evaluated.
pub trait DistanceOracle {
    fn distance(&self, u: VertexId, v: VertexId) -> Option<f64>;
}

impl DistanceOracle for MetricGraph {
    fn distance(&self, u: VertexId, v: VertexId) -> Option<f64> {
        self.length(u, v)
    }
}

impl<T: DistanceOracle + ?Sized> DistanceOracle for &T {
    fn distance(&self, u: VertexId, v: VertexId) -> Option<f64> {
        (**self).distance(u, v)
    }
}

/// A point in the interior of `simplex`: strictly positive weights aligned
/// with the simplex's vertex order, summing to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameFromPoint {
    pub simplex: Simplex,
    pub weights: Vec<f64>,
}

impl CameFromPoint {
    pub fn vertex(v: VertexId) -> Self {
        CameFromPoint { simplex: Simplex::vertex(v), weights: vec![1.0] }
    }

    /// Keeps the `(vertex, weight)` pairs with weight above [`EPS_WEIGHT`]
    /// and renormalizes them.
    pub fn from_weights<I: IntoIterator<Item = (VertexId, f64)>>(pairs: I) -> Self {
        let mut kept: Vec<(VertexId, f64)> = pairs.into_iter().filter(|&(_, w)| w > EPS_WEIGHT).collect();
        kept.sort_by_key(|&(v, _)| v);
        let sum: f64 = kept.iter().map(|&(_, w)| w).sum();
        CameFromPoint {
            simplex: Simplex::from_sorted(kept.iter().map(|&(v, _)| v).collect()),
            weights: kept.iter().map(|&(_, w)| w / sum).collect(),
        }
    }

    pub fn weight_of(&self, v: VertexId) -> f64 {
        self.simplex.vertices().binary_search(&v).map(|i| self.weights[i]).unwrap_or(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MemoKey {
    pub simplex: Simplex,
    pub apex: VertexId,
    /// Bit patterns of the non-apex labels in simplex order.
    pub dbar_bits: Vec<u64>,
}

/// Results of previous evaluations within one search run.
#[derive(Clone, Debug, Default)]
pub struct MemoTable {
    map: HashMap<MemoKey, (f64, CameFromPoint)>,
}

impl MemoTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&self, key: &MemoKey) -> Option<&(f64, CameFromPoint)> {
        self.map.get(key)
    }

    pub fn insert(&mut self, key: MemoKey, value: (f64, CameFromPoint)) {
        self.map.insert(key, value);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn clear(&mut self) {
        self.map.clear();
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThroughError {
    #[error("apex {apex} is not a vertex of {simplex}")]
    ApexNotInSimplex { simplex: Simplex, apex: VertexId },
    #[error("{0} has fewer than two vertices")]
    TooSmall(Simplex),
    #[error("no finite label for {0}")]
    MissingLabel(VertexId),
    #[error("no distance between {0} and {1}")]
    MissingDistance(VertexId, VertexId),
}

/// Evaluates distances through simplices for one search run.
#[derive(Clone, Debug)]
pub struct Evaluator {
    pub method: Method,
    memo: Option<MemoTable>,
    evaluations: u64,
    memo_hits: u64,
    wrong_root: bool,
}

impl Evaluator {
    pub fn new(method: Method) -> Self {
        Evaluator { method, memo: Some(MemoTable::new()), evaluations: 0, memo_hits: 0, wrong_root: false }
    }

    pub fn without_memo(method: Method) -> Self {
        Evaluator { memo: None, ..Self::new(method) }
    }

    /// Deliberately picks the near-side root in spherical mode.
    #[doc(hidden)]
    pub fn with_fault_injection(mut self) -> Self {
        self.wrong_root = true;
        self
    }

    /// Non-memoized evaluations, including recursive ones.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn memo_hits(&self) -> u64 {
        self.memo_hits
    }

    pub fn memo(&self) -> Option<&MemoTable> {
        self.memo.as_ref()
    }

    /// Restricted distance of `apex` through `sigma`, and the point on the
    /// opposite side where the path enters.
    ///
    /// `dbar` supplies labels for the non-apex vertices.
    ///
    /// ```
    /// use sstar::{MetricGraph, Method, Simplex, VertexId};
    /// use sstar::through::Evaluator;
    /// let g = MetricGraph::parse_edge_list("3\n0 1 1\n1 2 1\n0 2 1\n").unwrap();
    /// let mut ev = Evaluator::new(Method::Spherical);
    /// let (d, from) = ev
    ///     .distance_through_simplex(&g, &Simplex::from([0, 1, 2]), VertexId(0), |_| 1.0)
    ///     .unwrap();
    /// assert!((d - 3f64.sqrt()).abs() < 1e-12);
    /// assert_eq!(from.simplex, Simplex::from([1, 2]));
    /// ```
    pub fn distance_through_simplex<O, D>(
        &mut self,
        oracle: &O,
        sigma: &Simplex,
        apex: VertexId,
        dbar: D,
    ) -> Result<(f64, CameFromPoint), ThroughError>
    where
        O: DistanceOracle + ?Sized,
        D: Fn(VertexId) -> f64,
    {
        if !sigma.contains(apex) {
            return Err(ThroughError::ApexNotInSimplex { simplex: sigma.clone(), apex });
        }
        if sigma.len() < 2 {
            return Err(ThroughError::TooSmall(sigma.clone()));
        }
        self.eval(oracle, sigma, apex, &dbar)
    }

    fn eval<O, D>(
        &mut self,
        oracle: &O,
        sigma: &Simplex,
        apex: VertexId,
        dbar: &D,
    ) -> Result<(f64, CameFromPoint), ThroughError>
    where
        O: DistanceOracle + ?Sized,
        D: Fn(VertexId) -> f64,
    {
        let others: Vec<VertexId> = sigma.iter().filter(|&v| v != apex).collect();
        let mut labels = Vec::with_capacity(others.len());
        for &v in &others {
            let d = dbar(v);
            if !d.is_finite() {
                return Err(ThroughError::MissingLabel(v));
            }
            labels.push(d);
        }
        let key = self.memo.as_ref().map(|_| MemoKey {
            simplex: sigma.clone(),
            apex,
            dbar_bits: labels.iter().map(|d| d.to_bits()).collect(),
        });
        if let (Some(memo), Some(key)) = (&self.memo, &key) {
            if let Some(hit) = memo.lookup(key) {
                self.memo_hits += 1;
                return Ok(hit.clone());
            }
        }
        self.evaluations += 1;

        let result = if others.len() == 1 {
            let v = others[0];
            let d = oracle.distance(apex, v).ok_or(ThroughError::MissingDistance(apex, v))?;
            (labels[0] + d, CameFromPoint::vertex(v))
        } else {
            match self.extrapolate(oracle, apex, &others, &labels)? {
                Ok(x) if x.weights.iter().all(|&w| w >= -EPS_WEIGHT) => {
                    let cfp = CameFromPoint::from_weights(others.iter().copied().zip(x.weights.iter().copied()));
                    (x.distance, cfp)
                }
                Ok(x) => {
                    let drop = others.iter().zip(&x.weights).filter(|(_, &w)| w < -EPS_WEIGHT).map(|(&v, _)| v);
                    self.best_face(oracle, sigma, apex, dbar, drop.collect())?
                }
                Err(_) => self.best_face(oracle, sigma, apex, dbar, others.clone())?,
            }
        };

        if let (Some(memo), Some(key)) = (&mut self.memo, key) {
            memo.insert(key, result.clone());
        }
        Ok(result)
    }

    fn extrapolate<O: DistanceOracle + ?Sized>(
        &self,
        oracle: &O,
        apex: VertexId,
        others: &[VertexId],
        labels: &[f64],
    ) -> Result<Result<geometry::Extrapolation, GeometryError>, ThroughError> {
        let local = |i: usize| if i == 0 { apex } else { others[i - 1] };
        let n = others.len() + 1;
        let mut emb = Embedding::new();
        let mut d = Vec::with_capacity(n);
        for j in 1..n {
            d.clear();
            for i in 0..j {
                let x = oracle.distance(local(j), local(i)).ok_or(ThroughError::MissingDistance(local(j), local(i)))?;
                d.push(x);
            }
            if let Err(e) = emb.push(&d) {
                return Ok(Err(e));
            }
        }
        let x = match self.method {
            Method::Spherical => geometry::spherical_with_root(&emb, labels, self.wrong_root),
            Method::Linear => geometry::linear_extrapolate(&emb, labels),
        };
        Ok(x.and_then(|x| {
            if x.distance.is_finite() && x.weights.iter().all(|w| w.is_finite()) {
                Ok(x)
            } else {
                Err(GeometryError::NoRealSolution { discriminant: f64::NAN })
            }
        }))
    }

    fn best_face<O, D>(
        &mut self,
        oracle: &O,
        sigma: &Simplex,
        apex: VertexId,
        dbar: &D,
        drop: Vec<VertexId>,
    ) -> Result<(f64, CameFromPoint), ThroughError>
    where
        O: DistanceOracle + ?Sized,
        D: Fn(VertexId) -> f64,
    {
        let mut best: Option<(f64, CameFromPoint)> = None;
        for v in drop {
            let face = sigma.without(v);
            let r = self.eval(oracle, &face, apex, dbar)?;
            if best.as_ref().is_none_or(|b| r.0 < b.0) {
                best = Some(r);
            }
        }
        Ok(best.expect("at least one face"))
    }
}
