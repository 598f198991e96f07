//! Exact trajectory simulation: periodic patterns or the on-line direct
//! controller, with dense inter-sample substeps, plus containment analysis
//! against V and its epsilon-inflation.

use std::io::Write;

use crate::direct::{online_select_mode, ControllableSubspace};
use crate::error::{Error, Result};
use crate::flow::Vector;
use crate::indirect::SwitchingPattern;
use crate::model::{StateBox, SwitchedSystem};

/// One recorded point of a trajectory.
#[derive(Clone, Debug)]
pub struct SamplePoint {
    pub time: f64,
    pub state: Vector,
    pub mode: usize,
    /// True at the sampling instants k*tau (substep index 0 of a step).
    pub at_sample: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<SamplePoint>,
    pub substeps_per_tau: usize,
    pub tau: f64,
}

impl Trajectory {
    pub fn sampled_states(&self) -> impl Iterator<Item = &SamplePoint> {
        self.points.iter().filter(|p| p.at_sample)
    }
}

#[derive(Clone, Debug)]
pub struct ContainmentViolation {
    pub step: usize,
    pub state: Vector,
    pub distance: f64,
}

#[derive(Clone, Debug, Default)]
pub struct ContainmentReport {
    pub violations_at_samples: Vec<ContainmentViolation>,
    pub violations_between: Vec<ContainmentViolation>,
    pub max_excursion: f64,
}

impl ContainmentReport {
    pub fn is_clean(&self) -> bool {
        self.violations_at_samples.is_empty() && self.violations_between.is_empty()
    }
}

fn validate_run(sys: &SwitchedSystem, x0: &Vector, steps: usize, substeps: usize) -> Result<()> {
    if x0.len() != sys.dim {
        return Err(Error::DimensionMismatch {
            expected: sys.dim,
            got: x0.len(),
        });
    }
    if steps == 0 || substeps == 0 {
        return Err(Error::InvalidParameter(
            "steps and substeps must be >= 1".into(),
        ));
    }
    Ok(())
}

/// Simulate the periodic switching rule `pat` for `steps` sampling periods,
/// recording `substeps` exact substep states per period.
pub fn simulate_pattern(
    sys: &SwitchedSystem,
    x0: &Vector,
    pat: &SwitchingPattern,
    steps: usize,
    substeps: usize,
) -> Result<Trajectory> {
    validate_run(sys, x0, steps, substeps)?;
    for &m in &pat.modes {
        if m == 0 || m > sys.mode_count() {
            return Err(Error::InvalidParameter(format!(
                "pattern mode {m} is not a mode of the system"
            )));
        }
    }
    let sub_flows = sys.flow_maps_for(sys.tau / substeps as f64)?;
    let dt = sys.tau / substeps as f64;

    let mut points = Vec::with_capacity(steps * substeps + 1);
    let mut x = x0.clone();
    points.push(SamplePoint {
        time: 0.0,
        state: x.clone(),
        mode: pat.modes[0],
        at_sample: true,
    });
    for k in 0..steps {
        let mode = pat.modes[k % pat.len()];
        let f = &sub_flows[mode - 1];
        for s in 1..=substeps {
            x = f.post_point(&x);
            points.push(SamplePoint {
                time: (k * substeps + s) as f64 * dt,
                state: x.clone(),
                mode,
                at_sample: s == substeps,
            });
        }
    }
    Ok(Trajectory {
        points,
        substeps_per_tau: substeps,
        tau: sys.tau,
    })
}

/// Simulate the on-line controller of a converged subspace; the chosen mode
/// per sampling period is returned alongside the trajectory.
pub fn simulate_closed_loop(
    sys: &SwitchedSystem,
    x0: &Vector,
    cs: &ControllableSubspace,
    steps: usize,
    substeps: usize,
) -> Result<(Trajectory, Vec<usize>)> {
    validate_run(sys, x0, steps, substeps)?;
    if !cs.v_prime.contains_point(x0) {
        return Err(Error::X0OutsideControllable);
    }
    let flows = sys.flow_maps()?;
    let sub_flows = sys.flow_maps_for(sys.tau / substeps as f64)?;
    let dt = sys.tau / substeps as f64;

    let mut points = Vec::with_capacity(steps * substeps + 1);
    let mut mode_log = Vec::with_capacity(steps);
    let mut x = x0.clone();
    points.push(SamplePoint {
        time: 0.0,
        state: x.clone(),
        mode: 0,
        at_sample: true,
    });
    for k in 0..steps {
        let mode = online_select_mode(&x, cs, &flows)
            .map_err(|_| Error::NoSafeMode { step: k })?;
        mode_log.push(mode);
        let f = &sub_flows[mode - 1];
        for s in 1..=substeps {
            x = f.post_point(&x);
            points.push(SamplePoint {
                time: (k * substeps + s) as f64 * dt,
                state: x.clone(),
                mode,
                at_sample: s == substeps,
            });
        }
    }
    // the first point has no mode yet; stamp it with the first decision
    points[0].mode = mode_log[0];
    Ok((
        Trajectory {
            points,
            substeps_per_tau: substeps,
            tau: sys.tau,
        },
        mode_log,
    ))
}

/// Classify every trajectory point against V inflated by `epsilon`
/// (epsilon = 0 checks V itself).
pub fn check_containment(t: &Trajectory, v: &StateBox, epsilon: f64) -> ContainmentReport {
    let target = if epsilon > 0.0 { v.inflate(epsilon) } else { v.clone() };
    let mut report = ContainmentReport::default();
    for (i, p) in t.points.iter().enumerate() {
        let d = target.distance_outside(&p.state);
        if d > 0.0 {
            let viol = ContainmentViolation {
                step: i,
                state: p.state.clone(),
                distance: d,
            };
            if p.at_sample {
                report.violations_at_samples.push(viol);
            } else {
                report.violations_between.push(viol);
            }
            report.max_excursion = report.max_excursion.max(d);
        }
    }
    report
}

/// CSV form: header `t,mode,x1,...,xn`, one row per recorded point.
pub fn write_csv(t: &Trajectory, w: &mut impl Write) -> std::io::Result<()> {
    let n = t.points.first().map_or(0, |p| p.state.len());
    let header: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    writeln!(w, "t,mode,{}", header.join(","))?;
    for p in &t.points {
        let coords: Vec<String> = p.state.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{},{},{}", p.time, p.mode, coords.join(","))?;
    }
    Ok(())
}
