//! Rigid chain moving in the lab x–z plane, rotating about lab y.
//!
//! Joint `i` connects the proximal body (the base for `i = 0`) to body `i`
//! with a single hinge about y. The hinge sits at the base origin for the
//! first joint, at the distal end `(0, 0, -L)` of the proximal body
//! otherwise, and at the joint's center offset in the distal body.

use nalgebra::{DMatrix, DVector, Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::model::LimbChain;

const PLANAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct PlanarBody {
    pub mass: f64,
    /// Moment of inertia about the COM around y.
    pub iyy: f64,
    pub com: Vector3<f64>,
    /// Hinge to the proximal body, local coordinates.
    pub center: Vector3<f64>,
    /// Hinge to the distal body, local coordinates.
    pub tip: Vector3<f64>,
}

/// Base (reference segment) moving at constant velocity with fixed pitch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Base {
    pub origin: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub pitch: f64,
}

impl Base {
    pub fn origin_at(&self, t: f64) -> Vector3<f64> {
        self.origin + self.velocity * t
    }
}

/// Point force on the most distal body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct PointLoad {
    pub force: Vector3<f64>,
    pub point: Vector3<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct BodyState {
    pub angle: f64,
    pub omega: f64,
    pub alpha: f64,
    pub rotation: Matrix3<f64>,
    /// Proximal hinge position, velocity and acceleration.
    pub joint: Vector3<f64>,
    pub joint_vel: Vector3<f64>,
    pub joint_acc: Vector3<f64>,
    pub com: Vector3<f64>,
    pub com_vel: Vector3<f64>,
    pub com_acc: Vector3<f64>,
    center: Vector3<f64>,
}

impl BodyState {
    fn offset(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * (local - self.center)
    }

    pub fn point(&self, local: &Vector3<f64>) -> Vector3<f64> {
        self.joint + self.offset(local)
    }

    pub fn point_velocity_lab(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.joint_vel + self.omega * y_cross(&(p - self.joint))
    }

    fn point_acc(&self, local: &Vector3<f64>) -> Vector3<f64> {
        let r = self.offset(local);
        self.joint_acc + self.alpha * y_cross(&r) - self.omega * self.omega * r
    }

    /// Lab position of the body frame origin.
    pub fn origin(&self) -> Vector3<f64> {
        self.point(&Vector3::zeros())
    }
}

/// `ŷ × r`.
fn y_cross(r: &Vector3<f64>) -> Vector3<f64> {
    Vector3::new(r.z, 0.0, -r.x)
}

/// y component of `a × b`.
fn cross_y(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.z * b.x - a.x * b.z
}

pub(crate) fn pitch_matrix(angle: f64) -> Matrix3<f64> {
    *Rotation3::from_axis_angle(&Vector3::y_axis(), angle).matrix()
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct PlanarChain {
    pub bodies: Vec<PlanarBody>,
}

impl PlanarChain {
    /// Planar view of `chain`. Centers of mass and joint centers must lie in
    /// the segment x–z plane and the inertia tensor must not couple y with
    /// x or z.
    pub fn from_chain(chain: &LimbChain) -> Result<Self> {
        let segs = chain.segments();
        let mut bodies = Vec::with_capacity(segs.len());
        for (i, s) in segs.iter().enumerate() {
            let center = chain.joints()[i].center_offset;
            let i_scale = s.inertia.abs().max().max(1.0);
            let coupled = [
                s.inertia[(0, 1)],
                s.inertia[(1, 0)],
                s.inertia[(1, 2)],
                s.inertia[(2, 1)],
            ]
            .iter()
            .any(|v| v.abs() > PLANAR_TOL * i_scale);
            if s.com_offset.y.abs() > PLANAR_TOL || center.y.abs() > PLANAR_TOL || coupled {
                return Err(Error::Config(format!(
                    "segment '{}' is not planar: COM and joint center need y = 0 and the inertia \
                     tensor no x–y or y–z products",
                    s.name
                )));
            }
            bodies.push(PlanarBody {
                mass: s.mass,
                iyy: s.inertia[(1, 1)],
                com: s.com_offset,
                center,
                tip: Vector3::new(0.0, 0.0, -s.length),
            });
        }
        Ok(PlanarChain { bodies })
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn kinematics(
        &self,
        base: &Base,
        t: f64,
        q: &[f64],
        qd: &[f64],
        qdd: &[f64],
    ) -> Vec<BodyState> {
        let mut out: Vec<BodyState> = Vec::with_capacity(self.len());
        let (mut angle, mut omega, mut alpha) = (base.pitch, 0.0, 0.0);
        let (mut joint, mut joint_vel, mut joint_acc) =
            (base.origin_at(t), base.velocity, Vector3::zeros());
        for (i, b) in self.bodies.iter().enumerate() {
            if i > 0 {
                let prev = &out[i - 1];
                let tip = &self.bodies[i - 1].tip;
                joint = prev.point(tip);
                joint_vel = prev.point_velocity_lab(&joint);
                joint_acc = prev.point_acc(tip);
            }
            angle += q[i];
            omega += qd[i];
            alpha += qdd[i];
            let mut s = BodyState {
                angle,
                omega,
                alpha,
                rotation: pitch_matrix(angle),
                joint,
                joint_vel,
                joint_acc,
                com: Vector3::zeros(),
                com_vel: Vector3::zeros(),
                com_acc: Vector3::zeros(),
                center: b.center,
            };
            s.com = s.point(&b.com);
            s.com_vel = s.point_velocity_lab(&s.com);
            s.com_acc = s.point_acc(&b.com);
            out.push(s);
        }
        out
    }

    /// Force (lab) and y-moment that each proximal body exerts on body `i`
    /// at its hinge.
    pub fn joint_loads(
        &self,
        states: &[BodyState],
        gravity: f64,
        external: Option<&PointLoad>,
    ) -> Vec<(Vector3<f64>, f64)> {
        let n = self.len();
        let g = Vector3::new(0.0, 0.0, -gravity);
        let mut out = vec![(Vector3::zeros(), 0.0); n];
        let mut next: Option<(Vector3<f64>, f64, Vector3<f64>)> = None;
        for i in (0..n).rev() {
            let b = &self.bodies[i];
            let s = &states[i];
            let mut f = b.mass * (s.com_acc - g);
            let mut tau = b.iyy * s.alpha;
            if let Some((fn_, tn, pn)) = next {
                f += fn_;
                tau += tn + cross_y(&(pn - s.com), &fn_);
            }
            if i == n - 1 {
                if let Some(e) = external {
                    f -= e.force;
                    tau -= cross_y(&(e.point - s.com), &e.force);
                }
            }
            tau -= cross_y(&(s.joint - s.com), &f);
            out[i] = (f, tau);
            next = Some((f, tau, s.joint));
        }
        out
    }

    /// Hinge torques required for the motion `(q, qd, qdd)`.
    #[allow(clippy::too_many_arguments)]
    pub fn inverse(
        &self,
        base: &Base,
        t: f64,
        q: &[f64],
        qd: &[f64],
        qdd: &[f64],
        gravity: f64,
        external: Option<&PointLoad>,
    ) -> Vec<f64> {
        let states = self.kinematics(base, t, q, qd, qdd);
        self.joint_loads(&states, gravity, external)
            .into_iter()
            .map(|l| l.1)
            .collect()
    }

    /// Joint accelerations produced by hinge torques `tau`.
    #[allow(clippy::too_many_arguments)]
    pub fn forward(
        &self,
        base: &Base,
        t: f64,
        q: &[f64],
        qd: &[f64],
        tau: &[f64],
        gravity: f64,
        external: Option<&PointLoad>,
    ) -> Result<Vec<f64>> {
        let n = self.len();
        let zeros = vec![0.0; n];
        let bias = self.inverse(base, t, q, qd, &zeros, gravity, external);
        let still = Base {
            velocity: Vector3::zeros(),
            ..*base
        };
        let mut m = DMatrix::zeros(n, n);
        let mut unit = vec![0.0; n];
        for k in 0..n {
            unit[k] = 1.0;
            let col = self.inverse(&still, t, q, &zeros, &unit, 0.0, None);
            unit[k] = 0.0;
            for (r, v) in col.into_iter().enumerate() {
                m[(r, k)] = v;
            }
        }
        let rhs = DVector::from_iterator(n, tau.iter().zip(&bias).map(|(a, b)| a - b));
        let chol = m.cholesky().ok_or_else(|| {
            Error::Numerical(
                "mass matrix is not positive definite; segments need mass and inertia".into(),
            )
        })?;
        Ok(chol.solve(&rhs).iter().copied().collect())
    }

    /// Kinetic and gravitational potential energy (J), datum z = 0.
    pub fn energy(&self, states: &[BodyState], gravity: f64) -> (f64, f64) {
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for (b, s) in self.bodies.iter().zip(states) {
            kinetic += 0.5 * b.mass * s.com_vel.norm_squared() + 0.5 * b.iyy * s.omega * s.omega;
            potential += b.mass * gravity * s.com.z;
        }
        (kinetic, potential)
    }
}
