#![allow(dead_code)]

use std::sync::OnceLock;

use atlascut::atlas::{build_atlas, Atlas};
use atlascut::grid::LabelMask;
use atlascut::registration::RegistrationOptions;
use atlascut::validation::{generate_phantom, phantom_subjects, subject_specs, Phantom, PhantomSpec};

/// A quarter-size phantom that keeps the pipeline tests quick.
pub fn small_spec() -> PhantomSpec {
    PhantomSpec {
        nx: 64,
        ny: 64,
        n_slices: 8,
        center: [32.0, 32.0],
        bp_radius_base: 11.0,
        bp_radius_apex: 6.0,
        myo_thickness: 4.5,
        n_frames: 2,
        ..PhantomSpec::default()
    }
}

pub struct Fixture {
    pub spec: PhantomSpec,
    pub phantom: Phantom,
    pub atlas: Atlas,
}

pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let spec = small_spec();
        let subjects = phantom_subjects(&subject_specs(&spec, 3, 7)).unwrap();
        let atlas =
            build_atlas(&subjects[0].volume, &subjects[0].id, &subjects, &RegistrationOptions::default()).unwrap();
        Fixture {
            phantom: generate_phantom(&spec).unwrap(),
            spec,
            atlas,
        }
    })
}

pub fn disk(n: usize, cx: f64, cy: f64, r: f64) -> LabelMask {
    LabelMask::from_fn(n, n, |x, y| (x as f64 - cx).hypot(y as f64 - cy) <= r)
}

pub fn dice(a: &LabelMask, b: &LabelMask) -> f64 {
    let s = a.count() + b.count();
    if s == 0 {
        return 1.0;
    }
    2.0 * a.and(b).count() as f64 / s as f64
}
