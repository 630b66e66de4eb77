use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use talkpoints_core::corpus::Ideology;
use talkpoints_core::evaluation::{parse_direct_choice, parse_evidence, parse_option_number, parse_slot_choice};
use talkpoints_core::jsonfix::{lenient_parse, parse_yes_no};
use talkpoints_core::perspectives::parse_viewpoint;
use talkpoints_core::ptp::parse_label;
use talkpoints_core::talking_points::{parse_talking_point_response, validate_talking_point, MediaFrame};

use crate::{ensure, Check};

const BODY: &str = "The council approved the levy. Residents objected to the timing.";

const SEEDS: &[&str] = &[
    r#"{"talking_points":[{"summary":"The council approved the levy.","entities":["council","levy"],"activities":[{"description":"approval","actor":"council","target":"levy","sentiment":"positive","frame":"Economic"}]}]}"#,
    r#"```json
[{"summary":"Timing disputed","entities":["Residents"],"activities":[{"actor":"Residents","target":"levy","sentiment":"negative","frame":"Fairness and Equality"}]}]
```"#,
    r#"{"aspect":"Local levy","description":"Funding for roads"}"#,
    r#"{"title":"Levy","bullets":["Roads need money","Fair share"]}"#,
    r#"{"answers":[{"question":1,"answer":"yes","quotes":["The council approved the levy."]},{"question":2,"answer":"no","quotes":[]},{"question":3,"answer":"no","quotes":[]},{"question":4,"answer":"yes","quotes":["Residents objected"]}]}"#,
    "summary1",
    "liberal",
    "2.",
    "no",
    "{\"talking_points\": [",
];

fn mutate(rng: &mut ChaCha8Rng, s: &str) -> String {
    let mut b: Vec<char> = s.chars().collect();
    for _ in 0..rng.random_range(1..5) {
        let len = b.len();
        match rng.random_range(0..5) {
            0 if len > 0 => b.truncate(rng.random_range(0..len)),
            1 if len > 0 => {
                let at = rng.random_range(0..len);
                b.remove(at);
            }
            2 => {
                let at = rng.random_range(0..=len);
                let c = *['{', '}', '[', ']', '"', ',', ':', '\\', '\u{0}', 'ß', '\n'].choose(rng).expect("non-empty");
                b.insert(at, c);
            }
            3 if len > 0 => {
                let at = rng.random_range(0..len);
                b[at] = char::from_u32(rng.random_range(0..0xFFFF)).unwrap_or('?');
            }
            _ => b.extend(SEEDS.choose(rng).expect("non-empty").chars().take(rng.random_range(0..40))),
        }
    }
    b.into_iter().collect()
}

fn every_parser(raw: &str) -> bool {
    let mut ok = true;
    if let Ok(out) = parse_talking_point_response(raw, "a1", Ideology::Right) {
        ok &= out.points.iter().all(|p| validate_talking_point(p).is_ok());
    }
    let _ = lenient_parse(raw);
    let _ = parse_label(raw);
    if let Ok((_, bullets, _)) = parse_viewpoint(raw) {
        ok &= (1..=3).contains(&bullets.len());
    }
    if let Ok(ans) = parse_evidence(raw, BODY) {
        ok &= ans.len() == 4 && ans.iter().all(|a| a.quotes.iter().all(|q| !a.supported || BODY.contains(q.as_str())));
    }
    ok &= parse_option_number(raw, 4).is_none_or(|n| (1..=4).contains(&n));
    ok &= parse_slot_choice(raw).is_none_or(|s| s == 1 || s == 2);
    let _ = parse_direct_choice(raw);
    let _ = parse_yes_no(raw);
    let _ = MediaFrame::parse(raw);
    ok
}

pub fn robustness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let (mut crashes, mut invalid) = (0, 0);
    let total = 10_000;
    for i in 0..total {
        let raw = mutate(&mut rng, SEEDS[i % SEEDS.len()]);
        match catch_unwind(AssertUnwindSafe(|| every_parser(&raw))) {
            Ok(true) => {}
            Ok(false) => invalid += 1,
            Err(_) => crashes += 1,
        }
    }
    ensure!(crashes == 0, "{crashes} payloads panicked");
    ensure!(invalid == 0, "{invalid} payloads produced out-of-contract values");
    Ok(format!("{total} payloads, no crashes"))
}
