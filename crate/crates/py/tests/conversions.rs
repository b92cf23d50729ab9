use nalgebra::DMatrix;
use qutrit_gpt_py::{from_rows, to_rows};

#[test]
fn rows_round_trip() {
    let m = DMatrix::from_fn(3, 4, |i, j| (i * 10 + j) as f64 / 7.0);
    let rows = to_rows(&m);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2][1], m[(2, 1)]);
    assert_eq!(from_rows(&rows).unwrap(), m);
}

#[test]
fn empty_rows_give_an_empty_matrix() {
    assert_eq!(from_rows(&[]).unwrap().shape(), (0, 0));
}
