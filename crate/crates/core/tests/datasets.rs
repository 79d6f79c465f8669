mod common;

use std::fs;

use diffmap::datasets::{
    generate_helix, generate_swiss_roll, integrate_lorenz, load_csv, lorenz_derivative, write_csv,
    LorenzParams,
};
use diffmap::Error;

#[test]
fn helix_means_are_centered() {
    let h = generate_helix(15_000, 0.05, 1).unwrap();
    let n = h.nrows() as f64;
    for c in 0..2 {
        let col = h.column(c);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        assert!(mean.abs() < 3.0 * se, "column {c}: mean {mean}, se {se}");
    }
}

#[test]
fn swiss_roll_shape() {
    let roll = generate_swiss_roll(20_000, 0.05, 3).unwrap();
    assert_eq!((roll.data.nrows(), roll.data.ncols()), (20_000, 3));
    assert_eq!(roll.s.len(), 20_000);
    assert!(roll.data.as_slice().iter().all(|v| v.is_finite()));
}

#[test]
fn swiss_roll_neighbors_follow_the_spiral() {
    let roll = generate_swiss_roll(1000, 0.0, 5).unwrap();
    let x = &roll.data;
    let mut consistent = 0;
    for i in 0..x.nrows() {
        let mut best = (f64::INFINITY, i);
        for j in 0..x.nrows() {
            if j == i {
                continue;
            }
            let d = (x.get(i, 0) - x.get(j, 0)).powi(2) + (x.get(i, 2) - x.get(j, 2)).powi(2);
            if d < best.0 {
                best = (d, j);
            }
        }
        // Adjacent windings are 2 pi apart in s.
        if (roll.s[i] - roll.s[best.1]).abs() < std::f64::consts::PI {
            consistent += 1;
        }
    }
    assert!(consistent as f64 >= 0.99 * x.nrows() as f64, "{consistent}");
}

#[test]
fn lorenz_derivative_at_initial_condition() {
    let p = LorenzParams::default();
    assert_eq!(lorenz_derivative([-8.0, 8.0, 27.0], &p), [160.0, -16.0, -136.0]);
}

#[test]
fn lorenz_rk4_is_fourth_order() {
    let run = |dt: f64| {
        let p = LorenzParams {
            t_end: 1.0,
            dt,
            ..Default::default()
        };
        let traj = integrate_lorenz(&p).unwrap();
        traj.row(traj.nrows() - 1).to_vec()
    };
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let (y1, y2, y3) = (run(1e-3), run(5e-4), run(2.5e-4));
    let ratio = dist(&y1, &y2) / dist(&y2, &y3);
    assert!((8.0..=24.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn lorenz_default_trajectory_length() {
    let traj = integrate_lorenz(&LorenzParams::default()).unwrap();
    assert_eq!(traj.nrows(), 50_001);
    assert_eq!(traj.row(0), &[-8.0, 8.0, 27.0]);
}

#[test]
fn csv_parses_rectangular_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.csv");
    fs::write(&path, "1,2\n3,4").unwrap();
    let m = load_csv(&path, false).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (2, 2));
    assert_eq!(m.as_slice(), &[1.0, 2.0, 3.0, 4.0]);

    fs::write(&path, "x,y\r\n1.5,-2e-3\r\n3,4\r\n").unwrap();
    let m = load_csv(&path, true).unwrap();
    assert_eq!(m.as_slice(), &[1.5, -2e-3, 3.0, 4.0]);
}

fn parse_error_line(content: &str, header: bool) -> u64 {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, content).unwrap();
    match load_csv(&path, header) {
        Err(Error::Parse { line, .. }) => line,
        other => panic!("expected parse error, got {other:?}"),
    }
}

#[test]
fn csv_errors_carry_line_numbers() {
    assert_eq!(parse_error_line("1,2\n3", false), 2);
    assert_eq!(parse_error_line("1,2\n3,4\n5,abc\n", false), 3);
    assert_eq!(parse_error_line("a,b\n1,2\n3,x\n", true), 3);
    parse_error_line("", false);
    parse_error_line("1,2\n", false);
}

#[test]
fn csv_missing_file_is_io_error() {
    assert!(matches!(load_csv("/nonexistent/file.csv", false), Err(Error::Io(_))));
}

#[test]
fn csv_round_trip_of_helix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("helix.csv");
    let h = generate_helix(500, 0.05, 4).unwrap();
    write_csv(&path, &h).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let back = load_csv(&path, false).unwrap();
    assert_eq!((back.nrows(), back.ncols()), (500, 3));
    for (a, b) in h.as_slice().iter().zip(back.as_slice()) {
        assert!((a - b).abs() <= 1e-12);
    }
}
