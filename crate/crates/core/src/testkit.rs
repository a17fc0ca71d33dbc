//! Seeded random projects and PIMs for property tests, the acceptance suite
//! and benchmarks. Enabled with the `testkit` feature.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pim::{Behaviour, Pim, PresentationModel, Widget, WidgetCategory};
use crate::prototype::{HotspotPatch, ImageRef, MediaType, Project, ProjectId, Rect, ScreenId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rect(rng: &mut impl Rng) -> Rect {
    let x = rng.random_range(0.0..0.95);
    let y = rng.random_range(0.0..0.95);
    let w = rng.random_range(0.01..=(1.0 - x));
    let h = rng.random_range(0.01..=(1.0 - y));
    Rect::new(x, y, w, h).expect("generated inside bounds")
}

fn fake_image(rng: &mut impl Rng) -> ImageRef {
    let hash: String = (0..64)
        .map(|_| char::from_digit(rng.random_range(0..16), 16).unwrap())
        .collect();
    ImageRef {
        id: hash.clone(),
        media_type: MediaType::Png,
        width: rng.random_range(1..2000),
        height: rng.random_range(1..2000),
        content_hash: hash,
    }
}

const NAME_STYLES: [&str; 5] = ["Screen {}", "page-{}", "{} Menu", "Home{}", "Settings {}"];

/// A valid project with `1..=max_screens` screens and `0..=max_hotspots` hotspots each.
///
/// Screens are created first, then hotspots in random order across screens,
/// then links (about 70% of hotspots, self-links included) and S-behaviours.
pub fn random_project(rng: &mut impl Rng, max_screens: usize, max_hotspots: usize) -> Project {
    let mut project = Project::with_id(ProjectId::new("random"), "Random prototype").unwrap();
    let n = rng.random_range(1..=max_screens.max(1));
    let mut screens: Vec<ScreenId> = Vec::with_capacity(n);
    for i in 0..n {
        let style = NAME_STYLES.choose(rng).unwrap();
        let name = style.replace("{}", &i.to_string());
        let image = rng.random_bool(0.8).then(|| fake_image(rng));
        screens.push(project.add_screen(&name, image).unwrap().id.clone());
    }

    let mut slots: Vec<ScreenId> = screens
        .iter()
        .flat_map(|s| std::iter::repeat_n(s.clone(), rng.random_range(0..=max_hotspots)))
        .collect();
    // interleave hotspot creation across screens
    for i in (1..slots.len()).rev() {
        slots.swap(i, rng.random_range(0..=i));
    }
    let mut hotspots = Vec::with_capacity(slots.len());
    for screen in slots {
        let named = rng.random_bool(0.3);
        let name = named.then(|| format!("button {}", rng.random_range(0..1000)));
        let rect = random_rect(rng);
        if let Ok(h) = project.add_hotspot(&screen, rect, name.as_deref()) {
            hotspots.push((screen, h.id.clone()));
        }
    }

    for (screen, hotspot) in &hotspots {
        let link_target = rng
            .random_bool(0.7)
            .then(|| screens.choose(rng).unwrap().clone());
        let s_behaviours = if rng.random_bool(0.2) {
            vec![format!("S_action{}", rng.random_range(0..5))]
        } else {
            Vec::new()
        };
        project
            .update_hotspot(
                screen,
                hotspot,
                HotspotPatch {
                    link_target: Some(link_target),
                    s_behaviours: Some(s_behaviours),
                    ..HotspotPatch::default()
                },
            )
            .unwrap();
    }

    if rng.random_bool(0.3) {
        let initial = screens.choose(rng).unwrap().clone();
        project.set_initial_screen(&initial).unwrap();
    }
    project
}

/// A valid PIM with `1..=max_states` states whose edge density varies per PIM,
/// so unreachable states and dead ends are common.
pub fn random_pim(rng: &mut impl Rng, max_states: usize) -> Pim {
    let n = rng.random_range(1..=max_states.max(1));
    let names: Vec<String> = (0..n).map(|i| format!("St{i}")).collect();
    let density = rng.random_range(0.0..0.5);
    let mut states = Vec::with_capacity(n);
    for name in &names {
        let mut widgets = Vec::new();
        for target in &names {
            if !rng.random_bool(density) {
                continue;
            }
            // sometimes two widgets share one destination (merged transition)
            let copies = if rng.random_bool(0.2) { 2 } else { 1 };
            for c in 0..copies {
                widgets.push(Widget {
                    name: format!("to_{target}_{c}"),
                    category: WidgetCategory::ActionControl,
                    behaviours: vec![Behaviour::interaction(
                        format!("I_{target}"),
                        target.clone(),
                    )],
                });
            }
        }
        if rng.random_bool(0.2) {
            widgets.push(Widget {
                name: "label".into(),
                category: WidgetCategory::Display,
                behaviours: vec![Behaviour::system("S_show")],
            });
        }
        states.push(PresentationModel {
            name: name.clone(),
            widgets,
        });
    }
    Pim {
        name: "random".into(),
        transitions: Pim::derive_transitions(&states),
        initial: names.choose(rng).unwrap().clone(),
        states,
    }
}
