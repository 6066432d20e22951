//! Built-in two-dimensional experiments with their default
//! discretisation: Δt = 1e-4, Δx = Δy = 0.004 on the unit square, ε = 0.02,
//! θc = 1 and M = 1 − φ².

use std::f64::consts::SQRT_2;
use std::path::PathBuf;

use chsav::initializers::DEFAULT_LAMBDA;
use chsav::{NewtonParams, ShapeSpec};

use crate::config::{
    CertifyConfig, GridConfig, InitialConfig, OutputConfig, PotentialKind, RunConfig, SchemeConfig, TimeConfig,
};
use crate::error::RunError;

pub const RECIPES: [&str; 5] = ["random", "rose", "two-circles", "ellipse-circle", "pinch-off"];

const FULL_N: usize = 250;

fn base(name: &str, theta: f64, initial: InitialConfig, t_end: f64) -> RunConfig {
    RunConfig {
        grid: GridConfig {
            dim: 2,
            nx: FULL_N,
            ny: FULL_N,
            lx: 1.0,
            ly: 1.0,
        },
        scheme: SchemeConfig {
            epsilon: 0.02,
            dt: 1e-4,
            potential: PotentialKind::Logarithmic,
            theta,
            theta_c: 1.0,
            mobility_k: 1,
            beta: 1.0,
        },
        solver: NewtonParams::default(),
        initial,
        time: TimeConfig { t_end },
        output: OutputConfig {
            csv_path: PathBuf::from(format!("{name}.csv")),
            snapshot_every: 1000,
            snapshot_dir: Some(PathBuf::from(format!("{name}-snapshots"))),
            binary_snapshots: false,
        },
        certify: CertifyConfig::default(),
    }
}

fn tanh(shapes: Vec<ShapeSpec>) -> InitialConfig {
    InitialConfig::Tanh {
        lambda: DEFAULT_LAMBDA,
        shapes,
    }
}

/// The named experiment with `overrides` (`key=value`) applied.
pub fn recipe<S: AsRef<str>>(name: &str, overrides: &[S]) -> Result<RunConfig, RunError> {
    let small = ShapeSpec::Circle { cx: 0.75, cy: 0.75, r: 0.1 };
    let config = match name {
        "random" => base(
            name,
            0.3,
            InitialConfig::Random {
                mean: 0.2,
                amplitude: 0.05,
                seed: 1,
            },
            1.0,
        ),
        "rose" => base(name, 0.3, tanh(vec![ShapeSpec::Rose { cx: 0.5, cy: 0.5 }]), 1.0),
        "two-circles" => base(
            name,
            0.3,
            tanh(vec![ShapeSpec::Circle { cx: 0.4, cy: 0.4, r: 0.2 }, small]),
            2.0,
        ),
        "ellipse-circle" => base(
            name,
            0.3,
            tanh(vec![
                ShapeSpec::Ellipse {
                    cx: 0.4,
                    cy: 0.4,
                    ra: SQRT_2 / 5.0,
                    rb: SQRT_2 / 10.0,
                },
                small,
            ]),
            3.0,
        ),
        // aspect ratio 20; the extent is a reconstruction
        "pinch-off" => base(
            name,
            0.2,
            tanh(vec![ShapeSpec::Rectangle {
                cx: 0.5,
                cy: 0.5,
                w: 0.8,
                h: 0.04,
            }]),
            5.0,
        ),
        other => return Err(RunError::UnknownRecipe(other.into())),
    };
    config.with_overrides(overrides)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_recipe_validates() {
        for name in RECIPES {
            let c = recipe::<&str>(name, &[]).unwrap();
            assert_eq!(c.grid.nx, 250);
            assert!((c.grid().unwrap().dx() - 0.004).abs() < 1e-15);
        }
        assert!(matches!(recipe::<&str>("spiral", &[]), Err(RunError::UnknownRecipe(_))));
    }

    #[test]
    fn two_circles_geometry() {
        let c = recipe::<&str>("two-circles", &[]).unwrap();
        let InitialConfig::Tanh { shapes, .. } = c.initial else { panic!() };
        assert_eq!(shapes[0], ShapeSpec::Circle { cx: 0.4, cy: 0.4, r: 0.2 });
        assert_eq!(shapes[1], ShapeSpec::Circle { cx: 0.75, cy: 0.75, r: 0.1 });
    }

    #[test]
    fn ellipse_keeps_circle_area() {
        let c = recipe::<&str>("ellipse-circle", &[]).unwrap();
        let InitialConfig::Tanh { shapes, .. } = c.initial else { panic!() };
        let ShapeSpec::Ellipse { ra, rb, .. } = shapes[0] else { panic!() };
        assert!((ra * rb - 0.2f64 * 0.2).abs() < 1e-15);
    }

    #[test]
    fn overrides_apply() {
        let c = recipe("random", &["theta=0.5", "scheme.dt=1e-3", "seed=7", "nx=32", "ny=32"]).unwrap();
        assert_eq!(c.scheme.theta, 0.5);
        assert_eq!(c.scheme.dt, 1e-3);
        assert!(matches!(c.initial, InitialConfig::Random { seed: 7, .. }));
        assert_eq!(c.grid.nx, 32);
        assert!(recipe("random", &["theta=2.0"]).is_err());
        assert!(recipe("random", &["nonsense=1"]).is_err());
        assert!(recipe("random", &["theta"]).is_err());
    }
}
