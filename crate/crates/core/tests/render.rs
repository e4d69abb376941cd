use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use oltground_core::camera::Projection;
use oltground_core::render::{parse_ppm, render, write_png, write_ppm, HighlightSet, Image, RenderOptions, BACKGROUND};
use oltground_core::{auto_camera, compute_bbox, CameraPose, ObjectRecord, PointCloud, SceneOlt, ViewSpec};
use proptest::prelude::*;

fn olt() -> SceneOlt {
    SceneOlt::new(
        "s",
        vec![
            ObjectRecord { id: 1, label: "box".into(), center: [0.0, 0.0, 1.0], size: [1.0, 1.5, 2.0] },
            ObjectRecord { id: 2, label: "box".into(), center: [1.5, -1.0, 0.5], size: [0.5; 3] },
        ],
    )
    .unwrap()
}

fn bright() -> impl Strategy<Value = [u8; 3]> {
    (200u8..=255, any::<u8>(), any::<u8>()).prop_map(|(r, g, b)| [r, g, b])
}

fn cloud(z: std::ops::Range<f64>) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(((-3f64..3.0, -3f64..3.0, z), bright()), 1..300).prop_map(|v| {
        let (points, colors) = v.into_iter().map(|((x, y, z), c)| ([x, y, z], c)).unzip();
        PointCloud::new("s", points, colors).unwrap()
    })
}

fn digest(img: &Image) -> u64 {
    let mut h = DefaultHasher::new();
    (img.width, img.height).hash(&mut h);
    img.pixels.hash(&mut h);
    h.finish()
}

fn opts(workers: usize) -> RenderOptions {
    RenderOptions { width: 96, height: 72, splat_radius: 1, workers }
}

fn front_camera() -> CameraPose {
    CameraPose {
        eye: [0.0, -8.0, 1.0],
        target: [0.0, 0.0, 1.0],
        worldup: [0.0, 0.0, 1.0],
        projection: Projection::Perspective { fov_y_deg: 60.0 },
    }
}

fn covered(img: &Image) -> Vec<bool> {
    img.pixels.chunks(3).map(|p| p != BACKGROUND).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hash_is_stable_across_runs_and_workers(pc in cloud(0.0..2.0), view in prop::sample::select(vec![ViewSpec::Top, ViewSpec::Front, ViewSpec::Side])) {
        let olt = olt();
        let cam = auto_camera(&olt.bounds().unwrap().union(&compute_bbox(&pc.points).unwrap()), view).unwrap();
        let hl = HighlightSet::new(&[2, 1], &olt).unwrap();
        let base = digest(&render(&pc, &cam, &hl, &olt, &opts(1)).unwrap());
        for workers in [1, 2, 3, 7] {
            prop_assert_eq!(digest(&render(&pc, &cam, &hl, &olt, &opts(workers)).unwrap()), base);
        }
    }

    #[test]
    fn top_view_collapses_height(pc in cloud(0.0..2.0), dz in prop::collection::vec(0f64..2.0, 300)) {
        let olt = olt();
        let cam = auto_camera(&olt.bounds().unwrap().union(&compute_bbox(&pc.points).unwrap()), ViewSpec::Top).unwrap();
        let mut lifted = pc.clone();
        for (p, d) in lifted.points.iter_mut().zip(&dz) {
            p[2] = *d;
        }
        let none = HighlightSet::default();
        let a = render(&pc, &cam, &none, &olt, &opts(1)).unwrap();
        let b = render(&lifted, &cam, &none, &olt, &opts(1)).unwrap();
        prop_assert_eq!(covered(&a), covered(&b));
    }

    #[test]
    fn points_behind_the_camera_add_nothing(
        pc in cloud(0.0..2.0),
        behind in prop::collection::vec(((-20f64..20.0, -40f64..-8.0, -20f64..20.0), bright()), 1..100),
    ) {
        let olt = olt();
        let mut more = pc.clone();
        for ((x, y, z), c) in behind {
            // Strictly behind the eye plane y = -8.
            more.points.push([x, y - 1e-3, z]);
            more.colors.push(c);
        }
        let none = HighlightSet::default();
        prop_assert_eq!(
            render(&pc, &front_camera(), &none, &olt, &opts(1)).unwrap(),
            render(&more, &front_camera(), &none, &olt, &opts(2)).unwrap()
        );
    }

    #[test]
    fn png_decodes_to_the_ppm_pixels(pc in cloud(0.0..2.0)) {
        let olt = olt();
        let img = render(&pc, &front_camera(), &HighlightSet::new(&[1], &olt).unwrap(), &olt, &opts(1)).unwrap();
        let ppm = parse_ppm(&write_ppm(&img)).unwrap();
        let png_bytes = write_png(&img).unwrap();
        let mut reader = png::Decoder::new(std::io::Cursor::new(png_bytes)).read_info().unwrap();
        let mut buf = vec![0; reader.output_buffer_size().unwrap()];
        let info = reader.next_frame(&mut buf).unwrap();
        prop_assert_eq!(info.color_type, png::ColorType::Rgb);
        prop_assert_eq!(info.bit_depth, png::BitDepth::Eight);
        prop_assert_eq!((info.width as usize, info.height as usize), (ppm.width, ppm.height));
        prop_assert_eq!(&buf[..info.buffer_size()], &ppm.pixels[..]);
    }
}
