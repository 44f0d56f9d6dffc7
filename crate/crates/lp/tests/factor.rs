use vertiflow_lp::factor::Factor;

fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
    let m = a.len();
    (0..m)
        .map(|j| (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (i, a[i][j])).collect())
        .collect()
}

fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

#[test]
fn solves_small_system() {
    let a = vec![
        vec![2.0, 0.0, 1.0, 0.0],
        vec![1.0, 3.0, 0.0, 0.0],
        vec![0.0, 1.0, 4.0, 1.0],
        vec![0.0, 0.0, 1.0, 5.0],
    ];
    let f = Factor::new(4, &dense_to_cols(&a)).unwrap();
    let b = vec![1.0, 2.0, 3.0, 4.0];
    let mut x = b.clone();
    f.ftran(&mut x);
    let back = matvec(&a, &x);
    for (p, q) in back.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
    let mut y = b.clone();
    f.btran(&mut y);
    let at: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| a[j][i]).collect()).collect();
    let back = matvec(&at, &y);
    for (p, q) in back.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn eta_update_matches_refactor() {
    let mut a = vec![
        vec![1.0, 2.0, 0.0],
        vec![0.0, 1.0, 1.0],
        vec![1.0, 0.0, 3.0],
    ];
    let mut f = Factor::new(3, &dense_to_cols(&a)).unwrap();
    let newcol = vec![4.0, 1.0, 1.0];
    let mut alpha = newcol.clone();
    f.ftran(&mut alpha);
    f.update(1, &alpha);
    for i in 0..3 {
        a[i][1] = newcol[i];
    }
    let b = vec![3.0, -1.0, 2.0];
    let mut x = b.clone();
    f.ftran(&mut x);
    let back = matvec(&a, &x);
    for (p, q) in back.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
    let mut y = b.clone();
    f.btran(&mut y);
    let at: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| a[j][i]).collect()).collect();
    let back = matvec(&at, &y);
    for (p, q) in back.iter().zip(&b) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn reports_singular_columns() {
    let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
    let err = Factor::new(2, &dense_to_cols(&a)).err().unwrap();
    assert_eq!(err.cols.len(), 1);
    assert_eq!(err.rows.len(), 1);
}
