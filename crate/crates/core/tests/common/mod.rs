#![allow(dead_code)]

use multinorm::matrix::{validate_matrix, StandardMatrix};
use multinorm::rational::rat;
use multinorm::Rat;
use proptest::prelude::*;

/// Random standard matrices: random positive entries in [1/2, 4] with unit diagonal, kept if valid.
pub fn standard_matrix(n: usize) -> impl Strategy<Value = StandardMatrix> {
    proptest::collection::vec((1i128..=8, 1i128..=4), n * n)
        .prop_filter_map("not standard", move |v| {
            let mut rows = vec![vec![Rat::from_integer(1); n]; n];
            for j in 0..n {
                for k in 0..n {
                    if j != k {
                        let (a, b) = v[j * n + k];
                        rows[j][k] = rat(a, b);
                    }
                }
            }
            validate_matrix(rows).ok()
        })
}

pub fn rational_point(n: usize) -> impl Strategy<Value = Vec<Rat>> {
    proptest::collection::vec((0i128..=24, 1i128..=4), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| rat(a, b)).collect())
}

pub fn sample_matrices() -> Vec<StandardMatrix> {
    vec![
        StandardMatrix::figure1(),
        StandardMatrix::from_integers(&[&[1, 3], &[2, 1]]).unwrap(),
        validate_matrix(vec![vec![rat(1, 1), rat(3, 2)], vec![rat(1, 1), rat(1, 1)]]).unwrap(),
        validate_matrix(vec![vec![rat(1, 1), rat(1, 2)], vec![rat(5, 2), rat(1, 1)]]).unwrap(),
    ]
}

pub fn three_by_three() -> Vec<StandardMatrix> {
    vec![
        StandardMatrix::from_integers(&[&[1, 1, 1], &[2, 1, 1], &[4, 2, 1]]).unwrap(),
        StandardMatrix::from_integers(&[&[1, 2, 3], &[2, 1, 2], &[3, 2, 1]]).unwrap(),
        validate_matrix(vec![
            vec![rat(1, 1), rat(3, 2), rat(2, 1)],
            vec![rat(1, 1), rat(1, 1), rat(3, 2)],
            vec![rat(1, 1), rat(1, 1), rat(1, 1)],
        ])
        .unwrap(),
    ]
}
