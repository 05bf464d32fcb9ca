//! Dense direct solves on small domains, shared by the test targets.

use std::collections::HashMap;

use lerw_core::geometry::{BallDomain, LatticePoint};
use nalgebra::{DMatrix, DVector};

pub struct Dense {
    pub sites: Vec<LatticePoint>,
    pub index: HashMap<LatticePoint, usize>,
    /// `I - P` restricted to the domain.
    pub generator: DMatrix<f64>,
}

impl Dense {
    pub fn new(domain: &BallDomain) -> Self {
        let sites = domain.points();
        let index: HashMap<LatticePoint, usize> = sites.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        let n = sites.len();
        let mut generator = DMatrix::identity(n, n);
        for (i, p) in sites.iter().enumerate() {
            for q in p.neighbors() {
                if let Some(&j) = index.get(&q) {
                    generator[(i, j)] -= 1.0 / 6.0;
                }
            }
        }
        Dense { sites, index, generator }
    }

    pub fn green(&self) -> DMatrix<f64> {
        self.generator.clone().lu().try_inverse().unwrap()
    }

    /// `P^y(hit target before exiting)` for every site.
    pub fn hitting(&self, target: LatticePoint) -> DVector<f64> {
        let t = self.index[&target];
        let n = self.sites.len();
        let mut a = self.generator.clone();
        let mut b = DVector::zeros(n);
        for j in 0..n {
            a[(t, j)] = if j == t { 1.0 } else { 0.0 };
        }
        b[t] = 1.0;
        a.lu().solve(&b).unwrap()
    }
}
