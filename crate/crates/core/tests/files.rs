use gaussalign::gaussian::fit_gaussian;
use gaussalign::io::{
    matrix_from_csv, matrix_to_csv, read_gaussian, read_matrix_csv, write_gaussian, write_matrix_csv,
};
use gaussalign::{sampling, Error};

#[test]
fn fit_write_read_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = sampling::seeded(4);
    let cloud = sampling::standard_normal(&mut rng, 200, 6);
    let csv = dir.path().join("cloud.csv");
    write_matrix_csv(&csv, &cloud).unwrap();
    let back = read_matrix_csv(&csv, false).unwrap();
    assert_eq!(back, cloud);

    let g = fit_gaussian(&back, 1e-6).unwrap();
    let path = dir.path().join("g.json");
    write_gaussian(&path, &g).unwrap();
    let loaded = read_gaussian(&path).unwrap();
    assert_eq!(loaded, g);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.ends_with('\n'));
}

#[test]
fn malformed_files_report_location() {
    let err = matrix_from_csv("1,2\n3,x\n", false, "pts.csv").unwrap_err();
    match err {
        Error::Parse { path, line, .. } => {
            assert_eq!(path, "pts.csv");
            assert_eq!(line, 2);
        }
        other => panic!("unexpected error {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"mean\": [0.0],\n \"cov\": [[1.0]\n").unwrap();
    assert!(matches!(read_gaussian(&path), Err(Error::Parse { .. })));
    assert!(matches!(read_gaussian(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    assert_eq!(matrix_to_csv(&matrix_from_csv("0.1,2\n", false, "x").unwrap()), "0.1,2.0\n");
}
