use num_complex::Complex64 as C64;
use polship::detectors::{DetectorMap, RegionBox};
use polship::ggd::{GGammaParams, Histogram};
use polship::io::*;
use polship::polarimetry::{pauli_rgb, PolImage, ScatteringMatrix};
use polship::simulator::{SceneSpec, ShipMode};
use polship::Error;
use std::fs;

/// Values exactly representable in binary32.
fn image(w: usize, h: usize) -> PolImage {
    let v = |i: usize, k: f64| ((i * 37 + k as usize) % 101) as f64 * 0.125 - 6.0;
    let data = (0..w * h)
        .map(|i| ScatteringMatrix::new(C64::new(v(i, 1.0), v(i, 2.0)), C64::new(v(i, 3.0), -v(i, 4.0)), C64::new(v(i, 5.0), 1e-3_f32 as f64)))
        .collect();
    PolImage::new(w, h, data).unwrap()
}

#[test]
fn qpi_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.qpi");
    let img = image(7, 5);
    write_qpi(&p, &img).unwrap();
    assert_eq!(read_qpi(&p).unwrap(), img);
    let bytes = fs::read(&p).unwrap();
    let header_end = bytes.iter().position(|&b| b == b'\n').unwrap();
    assert_eq!(bytes.len() - header_end - 1, 7 * 5 * 24);
    let header: serde_json::Value = serde_json::from_slice(&bytes[..header_end]).unwrap();
    assert_eq!(header["magic"], "QPI1");
    assert_eq!(header["channels"], serde_json::json!(["HH", "HV", "VV"]));
}

#[test]
fn qpi_rejects_damage() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("a.qpi");
    let mut bytes = qpi_bytes(&image(4, 4));
    bytes.pop();
    fs::write(&p, &bytes).unwrap();
    assert!(matches!(read_qpi(&p), Err(Error::Format(_))));
    fs::write(&p, b"{\"magic\":\"QPI2\",\"width\":1,\"height\":1,\"channels\":[\"HH\",\"HV\",\"VV\"]}\n").unwrap();
    assert!(matches!(read_qpi(&p), Err(Error::Format(_))));
    fs::write(&p, b"no header").unwrap();
    assert!(matches!(read_qpi(&p), Err(Error::Format(_))));
    assert!(matches!(read_qpi(&dir.path().join("missing.qpi")), Err(Error::Io(_))));
}

#[test]
fn raster_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.bin");
    let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
    let b: Vec<f64> = (0..12).map(|i| 100.0 - i as f64).collect();
    write_raster(&p, 4, 3, &[("a", &a), ("b", &b)], Some(5)).unwrap();
    let r = read_raster(&p).unwrap();
    assert_eq!(r.meta.bands, vec!["a", "b"]);
    assert_eq!(r.meta.window, Some(5));
    assert_eq!(r.band("b").unwrap().iter().map(|&v| v as f64).collect::<Vec<_>>(), b);
    let m = r.to_map().unwrap();
    assert_eq!((&m.data, m.detector.as_str(), m.window), (&a, "a", 5));
    assert!(sidecar_path(&p).ends_with("m.bin.json"));

    let map = DetectorMap::new(2, 2, "joint-sa", 3, vec![0.0, 0.25, 1.5, 8.0]).unwrap();
    write_map(&p, &map).unwrap();
    assert_eq!(read_raster(&p).unwrap().to_map().unwrap(), map);

    assert!(write_raster(&p, 4, 3, &[("a", &a[..5])], None).is_err());
    fs::write(&p, [0u8; 7]).unwrap();
    assert!(matches!(read_raster(&p), Err(Error::Format(_))));
}

#[test]
fn pgm_and_ppm_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.pgm");
    let mask: Vec<bool> = (0..30).map(|i| i % 4 == 0).collect();
    write_pgm(&p, 6, 5, &render_mask(&mask)).unwrap();
    assert_eq!(read_mask_pgm(&p).unwrap(), (6, 5, mask.clone()));
    assert_eq!(render_mask(&read_mask_pgm(&p).unwrap().2), render_mask(&mask));

    let q = dir.path().join("c.ppm");
    let rgb: Vec<[u8; 3]> = (0..6).map(|i| [i as u8, 2 * i as u8, 255]).collect();
    write_ppm(&q, 3, 2, &rgb).unwrap();
    assert_eq!(read_pnm(&q).unwrap(), (3, 2, 3, rgb.as_flattened().to_vec()));
    assert!(matches!(read_mask_pgm(&q), Err(Error::Format(_))));

    // comments in the header are skipped
    fs::write(&p, b"P5\n# made by hand\n2 1\n255\n\x00\x07").unwrap();
    assert_eq!(read_mask_pgm(&p).unwrap(), (2, 1, vec![false, true]));
    fs::write(&p, b"P2\n2 1\n255\n0 7").unwrap();
    assert!(read_pnm(&p).is_err());
    assert!(write_pgm(&p, 2, 2, &[0; 3]).is_err());
}

#[test]
fn json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    let spec = polship::simulator::reference_scene();
    write_json(&p, &spec).unwrap();
    assert_eq!(read_json::<SceneSpec>(&p).unwrap(), spec);
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.contains("\"coherent\"") && text.contains("\"speckled\""));
    assert_eq!(ShipMode::Speckled, serde_json::from_str("\"speckled\"").unwrap());
    fs::write(&p, "{\"width\": 3").unwrap();
    assert!(matches!(read_json::<SceneSpec>(&p), Err(Error::Format(_))));
}

#[test]
fn rendering() {
    let zero = DetectorMap::new(3, 3, "t", 1, vec![0.0; 9]).unwrap();
    assert!(render_map(&zero).iter().all(|&b| b == 0));
    let ramp = DetectorMap::new(10, 10, "t", 1, (0..100).map(|i| i as f64).collect()).unwrap();
    let px = render_map(&ramp);
    assert_eq!(px[0], 0);
    assert_eq!(px[99], 255);
    assert!(px.windows(2).all(|w| w[0] <= w[1]));

    let one = C64::new(1.0, 0.0);
    let dihedral = PolImage::filled(2, 2, ScatteringMatrix::new(one, C64::new(0.0, 0.0), -one)).unwrap();
    assert!(pauli_rgb(&dihedral).iter().all(|p| p[0] == 255 && p[2] == 0));
}

#[test]
fn regions_file() {
    let r = parse_regions("ship 1,1,2,2 4,4,3,3  # first\n\n  wake 0,0,1,1 5,5,1,1\n").unwrap();
    assert_eq!(r.len(), 2);
    assert_eq!(r[1].name, "wake");
    assert_eq!(r[0].clutter, RegionBox::new(4, 4, 3, 3));
    for (text, line) in [("a 1,1,1,1\n", 1), ("\n\nb 1,1,1,1 x,1,1,1\n", 3), ("ok 0,0,1,1 0,0,1,1\nc 0,0,1 0,0,1,1", 2)] {
        let e = parse_regions(text).unwrap_err();
        assert!(matches!(e, Error::InvalidArgument(_)));
        assert!(e.to_string().contains(&format!("line {line}")), "{e}");
    }
}

#[test]
fn scr_table() {
    let mut data = vec![1.0; 16];
    data[0] = 10.0;
    let a = DetectorMap::new(4, 4, "span", 1, data).unwrap();
    let b = DetectorMap::new(4, 4, "dbsp", 1, vec![2.0; 16]).unwrap();
    let regions = parse_regions("t 0,0,1,1 2,2,2,2\n").unwrap();
    assert_eq!(scr_csv(&[&a, &b], &regions).unwrap(), "name,scr_span_db,scr_dbsp_db\nt,20.00,0.00\n");
    assert_eq!(scr_csv(&[&a], &[]).unwrap(), "name,scr_span_db\n");
    let zero = DetectorMap::new(4, 4, "z", 1, vec![0.0; 16]).unwrap();
    assert!(matches!(scr_csv(&[&zero], &regions), Err(Error::UndefinedScr)));
}

#[test]
fn histogram_table() {
    let vals: Vec<f64> = (1..=1000).map(|i| i as f64 / 500.0).collect();
    let h = Histogram::standard(&vals).unwrap();
    let csv = histogram_csv(&h, &GGammaParams::new(1.0, 1.0, 1.0).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "bin_left,bin_right,empirical_mass,model_mass");
    assert_eq!(lines.count(), h.counts.len());
}
