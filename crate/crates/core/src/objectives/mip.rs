use crate::error::{Error, Result};

/// Multilinear inner product `Σ_d Π_m v_{m,d}`.
pub fn mip(vectors: &[&[f64]]) -> Result<f64> {
    let [first, rest @ ..] = vectors else {
        return Err(Error::InvalidArgument("mip needs at least two vectors".into()));
    };
    if rest.is_empty() {
        return Err(Error::InvalidArgument("mip needs at least two vectors".into()));
    }
    if let Some(v) = rest.iter().find(|v| v.len() != first.len()) {
        return Err(Error::ShapeMismatch(format!(
            "mip over vectors of length {} and {}",
            first.len(),
            v.len()
        )));
    }
    Ok((0..first.len())
        .map(|d| rest.iter().fold(first[d], |acc, v| acc * v[d]))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reduces_to_dot_product() {
        let x = [0.5, -1.0, 2.0];
        let y = [4.0, 3.0, 0.25];
        assert_eq!(mip(&[&x, &y]).unwrap(), 0.5 * 4.0 - 3.0 + 0.5);
    }

    #[test]
    fn three_way_by_hand() {
        assert_eq!(mip(&[&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]]).unwrap(), 63.0);
    }

    #[test]
    fn zero_vector_annihilates() {
        assert_eq!(mip(&[&[1.0, 2.0], &[0.0, 0.0], &[5.0, 6.0]]).unwrap(), 0.0);
    }

    #[test]
    fn errors() {
        assert!(mip(&[&[1.0]]).is_err());
        assert!(mip(&[]).is_err());
        assert!(matches!(mip(&[&[1.0], &[1.0, 2.0]]), Err(Error::ShapeMismatch(_))));
    }

    // Small integers keep every product exact, so equalities are exact too.
    fn int_vecs(m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..6).prop_flat_map(move |d| {
            proptest::collection::vec(
                proptest::collection::vec((-8i32..8).prop_map(f64::from), d),
                m,
            )
        })
    }

    proptest! {
        #[test]
        fn multilinear_in_each_argument(vs in int_vecs(4), k in 0usize..4, e in -3i32..4) {
            let alpha = 2f64.powi(e);
            let base = mip(&vs.iter().map(|v| v.as_slice()).collect::<Vec<_>>()).unwrap();
            let mut scaled = vs.clone();
            scaled[k].iter_mut().for_each(|x| *x *= alpha);
            let s = mip(&scaled.iter().map(|v| v.as_slice()).collect::<Vec<_>>()).unwrap();
            prop_assert_eq!(s, alpha * base);
        }

        #[test]
        fn symmetric_under_reordering(vs in int_vecs(3)) {
            let orders = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            let base = mip(&[&vs[0], &vs[1], &vs[2]]).unwrap();
            for o in orders {
                prop_assert_eq!(mip(&[&vs[o[0]], &vs[o[1]], &vs[o[2]]]).unwrap(), base);
            }
        }
    }
}
