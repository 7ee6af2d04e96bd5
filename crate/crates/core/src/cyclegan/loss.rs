use serde::{Deserialize, Serialize};

use super::model::Networks;
use crate::error::{Error, Result};
use crate::nn::{l1, mse, Matrix, Scalar, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambdas {
    pub cyc: f64,
    pub id: f64,
}

/// The six generator-side terms and their weighted total.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub gan_a: f64,
    pub gan_b: f64,
    pub cyc_a: f64,
    pub cyc_b: f64,
    pub id_a: f64,
    pub id_b: f64,
    pub total: f64,
}

impl LossTerms {
    fn from_parts(parts: [f64; 6], lambdas: Lambdas) -> Result<Self> {
        let [gan_a, gan_b, cyc_a, cyc_b, id_a, id_b] = parts;
        let t = LossTerms {
            gan_a,
            gan_b,
            cyc_a,
            cyc_b,
            id_a,
            id_b,
            total: gan_a + gan_b + lambdas.cyc * (cyc_a + cyc_b) + lambdas.id * (id_a + id_b),
        };
        t.check_finite()?;
        Ok(t)
    }

    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("gan_a", self.gan_a),
            ("gan_b", self.gan_b),
            ("cyc_a", self.cyc_a),
            ("cyc_b", self.cyc_b),
            ("id_a", self.id_a),
            ("id_b", self.id_b),
            ("total", self.total),
        ]
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.named().iter().find(|(_, v)| !v.is_finite()) {
            Some((name, v)) => Err(Error::NonFinite(format!("loss term {name} = {v}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorLosses {
    pub d_a: f64,
    pub d_b: f64,
}

impl Lambdas {
    pub fn validate(&self) -> Result<()> {
        if !(self.cyc >= 0.0 && self.id >= 0.0 && self.cyc.is_finite() && self.id.is_finite()) {
            return Err(Error::Config(format!("lambdas must be finite and ≥ 0, got {self:?}")));
        }
        Ok(())
    }
}

fn check_batches<T: Scalar>(nets: &Networks<T>, a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    let f = nets.features();
    for (name, m) in [("batch_a", a), ("batch_b", b)] {
        if m.rows() == 0 {
            return Err(Error::EmptyInput(format!("{name} has no rows")));
        }
        if m.cols() != f {
            return Err(Error::Shape {
                op: "composite_loss",
                left: m.shape(),
                right: (m.rows(), f),
            });
        }
        let one = T::one();
        if m.data().iter().any(|v| !(*v >= -one && *v <= one)) {
            return Err(Error::Config(format!("{name} has values outside [-1, 1]")));
        }
    }
    Ok(())
}

fn ones<T: Scalar>(rows: usize) -> Matrix<T> {
    Matrix::filled(rows, 1, T::one())
}

/// Forward-only evaluation of the composite generator loss.
pub fn composite_loss<T: Scalar>(
    nets: &Networks<T>,
    a: &Matrix<T>,
    b: &Matrix<T>,
    lambdas: Lambdas,
) -> Result<LossTerms> {
    check_batches(nets, a, b)?;
    let fake_real = nets.g_a.predict(a)?;
    let fake_synth = nets.g_b.predict(b)?;
    let gan_a = mse(&nets.d_a.predict(&fake_real)?, &ones(a.rows()))?.0;
    let gan_b = mse(&nets.d_b.predict(&fake_synth)?, &ones(b.rows()))?.0;
    let cyc_a = l1(&nets.g_b.predict(&fake_real)?, a)?.0;
    let cyc_b = l1(&nets.g_a.predict(&fake_synth)?, b)?.0;
    let id_a = l1(&nets.g_b.predict(a)?, a)?.0;
    let id_b = l1(&nets.g_a.predict(b)?, b)?.0;
    LossTerms::from_parts(
        [gan_a, gan_b, cyc_a, cyc_b, id_a, id_b].map(Scalar::as_f64),
        lambdas,
    )
}

/// Cached generator forwards for one pair of batches.
///
/// `G_A` sees `[a; b]` then `G_B(b)`; `G_B` sees `[b; a]` then `G_A(a)`.
pub struct GeneratorPass<T: Scalar> {
    a: Matrix<T>,
    b: Matrix<T>,
    ga_first: Trace<T>,
    gb_first: Trace<T>,
    ga_cycle: Trace<T>,
    gb_cycle: Trace<T>,
    fake_real: Matrix<T>,
    fake_synth: Matrix<T>,
}

impl<T: Scalar> GeneratorPass<T> {
    pub fn run(nets: &Networks<T>, a: &Matrix<T>, b: &Matrix<T>) -> Result<Self> {
        check_batches(nets, a, b)?;
        let ga_first = nets.g_a.forward(&Matrix::vstack(&[a, b])?)?;
        let gb_first = nets.g_b.forward(&Matrix::vstack(&[b, a])?)?;
        let (fake_real, _) = ga_first.output().split_rows(a.rows());
        let (fake_synth, _) = gb_first.output().split_rows(b.rows());
        let ga_cycle = nets.g_a.forward(&fake_synth)?;
        let gb_cycle = nets.g_b.forward(&fake_real)?;
        Ok(GeneratorPass {
            a: a.clone(),
            b: b.clone(),
            ga_first,
            gb_first,
            ga_cycle,
            gb_cycle,
            fake_real,
            fake_synth,
        })
    }

    /// `G_A(a)`.
    pub fn fake_real(&self) -> &Matrix<T> {
        &self.fake_real
    }

    /// `G_B(b)`.
    pub fn fake_synth(&self) -> &Matrix<T> {
        &self.fake_synth
    }

    /// Evaluates the composite loss against the current discriminators and
    /// accumulates its gradient into the generator parameters only.
    pub fn backward(&self, nets: &mut Networks<T>, lambdas: Lambdas) -> Result<LossTerms> {
        let (na, nb) = (self.a.rows(), self.b.rows());
        let lc = T::from_f64(lambdas.cyc);
        let li = T::from_f64(lambdas.id);

        let da = nets.d_a.forward(&self.fake_real)?;
        let (gan_a, g) = mse(da.output(), &ones(na))?;
        let mut d_fake_real = nets.d_a.backward_input(&da, &g)?;
        let db = nets.d_b.forward(&self.fake_synth)?;
        let (gan_b, g) = mse(db.output(), &ones(nb))?;
        let mut d_fake_synth = nets.d_b.backward_input(&db, &g)?;

        let (cyc_a, mut g) = l1(self.gb_cycle.output(), &self.a)?;
        g.scale_in_place(lc);
        d_fake_real.add_assign(&nets.g_b.backward(&self.gb_cycle, &g)?)?;
        let (cyc_b, mut g) = l1(self.ga_cycle.output(), &self.b)?;
        g.scale_in_place(lc);
        d_fake_synth.add_assign(&nets.g_a.backward(&self.ga_cycle, &g)?)?;

        let (_, id_b_out) = self.ga_first.output().split_rows(na);
        let (id_b, mut g_id_b) = l1(&id_b_out, &self.b)?;
        g_id_b.scale_in_place(li);
        let (_, id_a_out) = self.gb_first.output().split_rows(nb);
        let (id_a, mut g_id_a) = l1(&id_a_out, &self.a)?;
        g_id_a.scale_in_place(li);

        nets.g_a
            .backward(&self.ga_first, &Matrix::vstack(&[&d_fake_real, &g_id_b])?)?;
        nets.g_b
            .backward(&self.gb_first, &Matrix::vstack(&[&d_fake_synth, &g_id_a])?)?;

        LossTerms::from_parts(
            [gan_a, gan_b, cyc_a, cyc_b, id_a, id_b].map(Scalar::as_f64),
            lambdas,
        )
    }
}

/// Distance of the composite and discriminator objectives from their
/// non-differentiable points: the smallest |pre-activation| entering any ReLU
/// and the smallest |residual| inside any L1 term.
pub fn kink_margin<T: Scalar>(nets: &Networks<T>, a: &Matrix<T>, b: &Matrix<T>) -> Result<f64> {
    check_batches(nets, a, b)?;
    let fake_real = nets.g_a.predict(a)?;
    let fake_synth = nets.g_b.predict(b)?;
    let mut m = f64::INFINITY;
    for (net, x) in [
        (&nets.g_a, a),
        (&nets.g_a, b),
        (&nets.g_a, &fake_synth),
        (&nets.g_b, b),
        (&nets.g_b, a),
        (&nets.g_b, &fake_real),
        (&nets.d_a, &fake_real),
        (&nets.d_a, b),
        (&nets.d_b, &fake_synth),
        (&nets.d_b, a),
    ] {
        m = m.min(net.relu_margin(x)?);
    }
    for (pred, target) in [
        (nets.g_b.predict(&fake_real)?, a),
        (nets.g_a.predict(&fake_synth)?, b),
        (nets.g_b.predict(a)?, a),
        (nets.g_a.predict(b)?, b),
    ] {
        for (p, t) in pred.data().iter().zip(target.data()) {
            m = m.min((*p - *t).as_f64().abs());
        }
    }
    Ok(m)
}

/// Least-squares discriminator objective, halved over its real and generated
/// parts: `D_A` toward 1 on `b` and 0 on `G_A(a)`, `D_B` toward 1 on `a` and
/// 0 on `G_B(b)`.
pub fn discriminator_loss<T: Scalar>(nets: &Networks<T>, a: &Matrix<T>, b: &Matrix<T>) -> Result<DiscriminatorLosses> {
    check_batches(nets, a, b)?;
    let fake_real = nets.g_a.predict(a)?;
    let fake_synth = nets.g_b.predict(b)?;
    let half = |real: &Matrix<T>, fake: &Matrix<T>| -> Result<f64> {
        let r = mse(real, &ones(real.rows()))?.0.as_f64();
        let f = mse(fake, &Matrix::zeros(fake.rows(), 1))?.0.as_f64();
        Ok(0.5 * (r + f))
    };
    Ok(DiscriminatorLosses {
        d_a: half(&nets.d_a.predict(b)?, &nets.d_a.predict(&fake_real)?)?,
        d_b: half(&nets.d_b.predict(a)?, &nets.d_b.predict(&fake_synth)?)?,
    })
}

/// Accumulates the discriminator gradients for the generated batches in
/// `pass`; generators are treated as constants.
pub fn discriminator_backward<T: Scalar>(nets: &mut Networks<T>, pass: &GeneratorPass<T>) -> Result<DiscriminatorLosses> {
    let d_a = disc_side(&mut nets.d_a, &pass.b, &pass.fake_real)?;
    let d_b = disc_side(&mut nets.d_b, &pass.a, &pass.fake_synth)?;
    let out = DiscriminatorLosses { d_a, d_b };
    for (name, v) in [("d_a", d_a), ("d_b", d_b)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("loss term {name} = {v}")));
        }
    }
    Ok(out)
}

fn disc_side<T: Scalar>(d: &mut crate::nn::Mlp<T>, real: &Matrix<T>, fake: &Matrix<T>) -> Result<f64> {
    let nr = real.rows();
    let trace = d.forward(&Matrix::vstack(&[real, fake])?)?;
    let (out_r, out_f) = trace.output().split_rows(nr);
    let (lr, mut gr) = mse(&out_r, &ones(nr))?;
    let (lf, mut gf) = mse(&out_f, &Matrix::zeros(fake.rows(), 1))?;
    let half = T::from_f64(0.5);
    gr.scale_in_place(half);
    gf.scale_in_place(half);
    d.backward(&trace, &Matrix::vstack(&[&gr, &gf])?)?;
    Ok(0.5 * (lr.as_f64() + lf.as_f64()))
}
