//! Symmetric quadrature rules on triangles in barycentric coordinates.

use std::sync::OnceLock;

/// Quadrature rule; weights sum to one (multiply by the triangle area).
#[derive(Debug)]
pub struct Rule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl Rule {
    fn build(degree: usize, orbits: &[(f64, Orbit)]) -> Rule {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for &(w, orbit) in orbits {
            for p in orbit.points() {
                points.push(p);
                weights.push(w);
            }
        }
        Rule { degree, points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Iterates over `(barycentric point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

#[derive(Clone, Copy)]
enum Orbit {
    Centroid,
    /// (a, a, 1 - 2a) and permutations.
    Two(f64),
    /// (a, b, 1 - a - b) and all six permutations.
    Six(f64, f64),
}

impl Orbit {
    fn points(self) -> Vec<[f64; 3]> {
        match self {
            Orbit::Centroid => vec![[1.0 / 3.0; 3]],
            Orbit::Two(a) => {
                let b = 1.0 - 2.0 * a;
                vec![[a, a, b], [a, b, a], [b, a, a]]
            }
            Orbit::Six(a, b) => {
                let c = 1.0 - a - b;
                vec![[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
            }
        }
    }
}

/// Three-point rule exact for degree 2.
pub fn degree2() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| Rule::build(2, &[(1.0 / 3.0, Orbit::Two(1.0 / 6.0))]))
}

/// Six-point rule exact for degree 4.
pub fn degree4() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| {
        Rule::build(
            4,
            &[
                (0.223381589678011465944394854277, Orbit::Two(0.445948490915964886318329253883)),
                (0.109951743655321867638938479056, Orbit::Two(0.091576213509770743459571463402)),
            ],
        )
    })
}

/// Seven-point rule exact for degree 5.
pub fn degree5() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| {
        let s = 15f64.sqrt();
        Rule::build(
            5,
            &[
                (9.0 / 40.0, Orbit::Centroid),
                ((155.0 - s) / 1200.0, Orbit::Two((6.0 - s) / 21.0)),
                ((155.0 + s) / 1200.0, Orbit::Two((6.0 + s) / 21.0)),
            ],
        )
    })
}

/// Twelve-point rule exact for degree 6.
pub fn degree6() -> &'static Rule {
    static R: OnceLock<Rule> = OnceLock::new();
    R.get_or_init(|| {
        Rule::build(
            6,
            &[
                (0.116786275726379366030690538687, Orbit::Two(0.249286745170910421291638553107)),
                (0.050844906370206816920936809106, Orbit::Two(0.063089014491502228340331602870)),
                (
                    0.082851075618373575193553456421,
                    Orbit::Six(0.053145049844816947353249671631, 0.310352451033784405416607733956),
                ),
            ],
        )
    })
}
