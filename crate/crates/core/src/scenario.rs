//! Built-in scenarios: the two counter-example measurement contexts and a
//! projective reference context, packaged with default preparation and
//! post-selection.

use crate::error::{Error, Result};
use crate::gexpr::{GMatrixFn, GRange};
use crate::matcore::CMatrix;
use crate::measurement::{MeasurementContext, Observable, PostSelection, State};
use crate::scalar::Real;

/// A ready-to-run configuration: context, observable, preparation and
/// post-selection.
#[derive(Debug, Clone)]
pub struct Scenario<R: Real> {
    pub name: String,
    pub context: MeasurementContext<R>,
    pub observable: Observable<R>,
    pub state: State<R>,
    pub post: PostSelection<R>,
}

/// Three-outcome qubit context with two outcome weights shifted linearly in
/// g and a third balancing outcome, measuring diag(a, b). Defaults pair it
/// with a |+⟩ preparation and a tan θ = 1/2 rank-1 post-selection.
pub fn ce1<R: Real>(a: R, b: R) -> Scenario<R> {
    let validity = GRange::up_to(R::of(0.5));
    let ops = vec![
        GMatrixFn::parse_entries(2, &["1/2 + g", "0", "0", "1/2 - g"], validity).unwrap(),
        GMatrixFn::parse_entries(2, &["1/2 - g", "0", "0", "1/2 + g"], validity).unwrap(),
        GMatrixFn::parse_entries(
            2,
            &["sqrt(1/2 - 2*g^2)", "0", "0", "sqrt(1/2 - 2*g^2)"],
            validity,
        )
        .unwrap(),
    ];
    let context =
        MeasurementContext::new(ops, vec!["plus".into(), "minus".into(), "null".into()])
            .expect("balanced three-outcome context satisfies the POVM condition");
    let observable = Observable::diagonal(&[a, b]);
    let state = State::new(CMatrix::from_real_f64(2, &[0.5, 0.5, 0.5, 0.5])).unwrap();
    let post = PostSelection::new(CMatrix::from_real_f64(2, &[0.8, 0.4, 0.4, 0.2])).unwrap();
    Scenario {
        name: "ce1".into(),
        context,
        observable,
        state,
        post,
    }
}

/// Three-outcome qutrit context whose first-order truncation cannot
/// reproduce the projector observable diag(1, 0, 0). Defaults pair it with a
/// uniform superposition preparation and a generic rank-1 post-selection.
pub fn ce2<R: Real>() -> Scenario<R> {
    let validity = GRange::up_to(R::of(0.145));
    let z = "0";
    let ops = vec![
        GMatrixFn::parse_entries(
            3,
            &[
                "sqrt(1/2 + g)", z, z,
                z, "sqrt(1/2)", z,
                z, z, "sqrt(1/2 + g)",
            ],
            validity,
        )
        .unwrap(),
        GMatrixFn::parse_entries(
            3,
            &[
                "sqrt(1/3 + g^2)", z, z,
                z, "sqrt(1/3 + g)", z,
                z, z, "sqrt(1/3)",
            ],
            validity,
        )
        .unwrap(),
        GMatrixFn::parse_entries(
            3,
            &[
                "sqrt(1/6 - g - g^2)", z, z,
                z, "sqrt(1/6 - g)", z,
                z, z, "sqrt(1/6 - g)",
            ],
            validity,
        )
        .unwrap(),
    ];
    let context = MeasurementContext::new(ops, vec!["m1".into(), "m2".into(), "m3".into()])
        .expect("corrected operators satisfy the POVM condition");
    let observable = Observable::diagonal(&[R::one(), R::zero(), R::zero()]);
    // |ψ⟩⟨ψ| for the uniform superposition ψ = (1, 1, 1)/√3.
    let third = R::of(1.0 / 3.0);
    let state = State::new(CMatrix::from_real(3, &[third; 9])).unwrap();
    let sixth = 1.0 / 6.0;
    let post = PostSelection::new(CMatrix::from_real_f64(
        3,
        &[
            4.0 * sixth, 2.0 * sixth, 2.0 * sixth,
            2.0 * sixth, sixth, sixth,
            2.0 * sixth, sixth, sixth,
        ],
    ))
    .unwrap();
    Scenario {
        name: "ce2".into(),
        context,
        observable,
        state,
        post,
    }
}

/// Projective (strong, g-independent) context from the spectral projectors
/// of an observable. Requires real projectors, since context entries live in
/// the real expression grammar.
pub fn projective_context<R: Real>(obs: &Observable<R>) -> Result<MeasurementContext<R>> {
    let dim = obs.dim();
    let validity = GRange::up_to(R::of(0.5));
    // Outcomes in basis-slot order (leading projector weight), so projective
    // calibration matrices come out as the identity rather than a permutation.
    let mut spaces: Vec<_> = obs.spectrum().iter().collect();
    spaces.sort_by_key(|s| {
        let mut best = (R::neg_infinity(), 0usize);
        for i in 0..dim {
            let w = s.projector[(i, i)].re;
            if w > best.0 {
                best = (w, i);
            }
        }
        best.1
    });
    let mut ops = Vec::new();
    let mut labels = Vec::new();
    for (k, space) in spaces.into_iter().enumerate() {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = space.projector[(i, j)];
                if z.im.abs() > crate::tol::hermiticity::<R>() {
                    return Err(Error::Invalid(
                        "projective context needs real spectral projectors".into(),
                    ));
                }
                entries.push(z.re);
            }
        }
        ops.push(GMatrixFn::constant(dim, &entries, validity));
        labels.push(format!("eig{}", k + 1));
    }
    MeasurementContext::new(ops, labels)
}

/// Projective qubit scenario for diag(1, −1), sharing the preparation and
/// post-selection defaults of [`ce1`].
pub fn projective<R: Real>() -> Scenario<R> {
    let observable = Observable::diagonal(&[R::one(), -R::one()]);
    let context = projective_context(&observable).unwrap();
    let state = State::new(CMatrix::from_real_f64(2, &[0.5, 0.5, 0.5, 0.5])).unwrap();
    let post = PostSelection::new(CMatrix::from_real_f64(2, &[0.8, 0.4, 0.4, 0.2])).unwrap();
    Scenario {
        name: "projective".into(),
        context,
        observable,
        state,
        post,
    }
}
