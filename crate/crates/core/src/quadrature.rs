//! Symmetric quadrature rules on triangles in barycentric coordinates.

#![allow(clippy::excessive_precision)]

use crate::mesh::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates of the nodes.
    pub points: Vec<[f64; 3]>,
    /// Weights summing to one; multiply by the element area on use.
    pub weights: Vec<f64>,
    /// Total polynomial degree integrated exactly.
    pub order: u32,
}

fn orbit21(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[a, a, b], [a, b, a], [b, a, a]]
}

fn orbit111(a: f64, b: f64) -> [[f64; 3]; 6] {
    let c = 1.0 - a - b;
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

impl QuadratureRule {
    pub fn centroid() -> Self {
        Self {
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
            order: 1,
        }
    }

    pub fn order2() -> Self {
        Self {
            points: orbit21(1.0 / 6.0).to_vec(),
            weights: vec![1.0 / 3.0; 3],
            order: 2,
        }
    }

    /// Six-point rule (Dunavant degree 4).
    pub fn order4() -> Self {
        let mut points = orbit21(0.445_948_490_915_964_886_32).to_vec();
        points.extend(orbit21(0.091_576_213_509_770_743_46));
        let mut weights = vec![0.223_381_589_678_011_465_7; 3];
        weights.extend([0.109_951_743_655_321_867_64; 3]);
        Self {
            points,
            weights,
            order: 4,
        }
    }

    /// Twelve-point rule (Dunavant degree 6).
    pub fn order6() -> Self {
        let mut points = orbit21(0.249_286_745_170_910_421_29).to_vec();
        points.extend(orbit21(0.063_089_014_491_502_228_34));
        points.extend(orbit111(0.053_145_049_844_816_947_353, 0.310_352_451_033_784_405_42));
        let mut weights = vec![0.116_786_275_726_379_366_03; 3];
        weights.extend([0.050_844_906_370_206_816_921; 3]);
        weights.extend([0.082_851_075_618_373_575_194; 6]);
        Self {
            points,
            weights,
            order: 6,
        }
    }

    /// Cheapest available rule exact to at least `order`.
    pub fn with_order(order: u32) -> Self {
        match order {
            0 | 1 => Self::centroid(),
            2 => Self::order2(),
            3 | 4 => Self::order4(),
            _ => Self::order6(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates `(physical point, barycentric point, weight)` on a triangle;
    /// the weight already includes the area.
    pub fn nodes_on<'a>(
        &'a self,
        vertices: [Point; 3],
        area: f64,
    ) -> impl Iterator<Item = (Point, [f64; 3], f64)> + 'a {
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(l, &w)| (to_physical(vertices, *l), *l, w * area))
    }
}

pub fn to_physical(p: [Point; 3], l: [f64; 3]) -> Point {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}
