//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use itertools::Itertools;
use potiso_core::density::{generic_build, Direction};
use potiso_core::oracle::{
    agreement_audit, bruteforce_validate, exhaustive_amalgamation_audit,
    exhaustive_extension_audit, expected_cases, truncation_automorphisms, BoundedUniverse,
};
use potiso_core::structures::{Certificate, ConeRule};
use potiso_core::{
    BranchFamily, BranchRule, BranchSpec, Coord, Element, Mode, OddPattern, PrefixWord,
    StructureError, SubstructureSpec,
};
use serde_json::Value;

const BUDGET: usize = 5_000_000;

struct Outcome {
    pass: bool,
    detail: String,
    reports: Vec<Value>,
}

fn outcome(pass: bool, detail: String, reports: Vec<Value>) -> Outcome {
    Outcome {
        pass,
        detail,
        reports,
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialise")
}

fn amalgamation(u: BoundedUniverse, limit: Duration) -> Outcome {
    let t = Instant::now();
    let rep = exhaustive_amalgamation_audit(&u, BUDGET).expect("universe within budget");
    let took = t.elapsed();
    let pass = rep.violations.is_empty() && rep.conditions > 0 && took <= limit;
    let detail = format!(
        "{} conditions, {} classes, {} same-class pairs, {} violations, {:.1}s",
        rep.conditions,
        rep.signature_classes,
        rep.same_class_pairs,
        rep.violations.len(),
        took.as_secs_f64()
    );
    outcome(pass, detail, vec![to_value(&rep)])
}

fn criterion1() -> Outcome {
    amalgamation(BoundedUniverse::standard_qtree(), Duration::from_secs(300))
}

fn criterion2() -> Outcome {
    let u = BoundedUniverse::standard_fer();
    assert!(u.include_designated);
    amalgamation(u, Duration::from_secs(300))
}

fn criterion3() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut reports = Vec::new();
    for u in [
        BoundedUniverse::standard_qtree(),
        BoundedUniverse::standard_fer(),
    ] {
        let rep = exhaustive_extension_audit(&u, BUDGET).expect("universe within budget");
        let every_tag = expected_cases(u.mode)
            .iter()
            .all(|c| rep.case_histogram.get(c.name()).copied().unwrap_or(0) > 0);
        pass &= rep.failures.is_empty() && rep.uncovered_cases.is_empty() && every_tag;
        details.push(format!(
            "{}: {} extensions, {} failures, tags {:?}",
            u.mode,
            rep.extensions,
            rep.failures.len(),
            rep.case_histogram
        ));
        reports.push(to_value(&rep));
    }
    outcome(pass, details.join("; "), reports)
}

/// Lexicographic comparison on materialised words, independent of `Ord`.
fn raw_less(x: &Element, y: &Element, depth: usize) -> bool {
    let wx: Vec<Coord> = (0..depth).map(|i| x.value(i)).collect();
    let wy: Vec<Coord> = (0..depth).map(|i| y.value(i)).collect();
    match wx.iter().zip(&wy).find(|(a, b)| a != b) {
        Some((a, b)) => a < b,
        None => panic!("depth {depth} does not separate {x} and {y}"),
    }
}

fn criterion4() -> Outcome {
    let t = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    let mut reports = Vec::new();
    for u in [
        BoundedUniverse::standard_qtree(),
        BoundedUniverse::standard_fer(),
    ] {
        let full = Arc::new(u.spec());
        let removed = Arc::new(full.without_designated());
        let run = generic_build(removed.clone(), full.clone(), 200).expect("generic build runs");
        let p = &run.condition;
        let first_a = removed
            .enumerate_elements(100)
            .expect("enough source elements");
        let first_c = full
            .enumerate_elements(100)
            .expect("enough target elements");
        let covered = first_a.iter().all(|a| p.position(a).is_some())
            && first_c.iter().all(|b| p.range().any(|y| y == b));
        let members = p.domain().all(|a| removed.contains(a) == Ok(true))
            && p.range().all(|b| full.contains(b) == Ok(true));
        let brute = bruteforce_validate(p, None);
        let depth = potiso_core::oracle::auto_depth(p);
        let monotone = u.mode != Mode::Qtree || {
            let pairs = p.pairs();
            (0..pairs.len()).all(|i| {
                (i + 1..pairs.len()).all(|j| {
                    raw_less(&pairs[i].0, &pairs[j].0, depth)
                        && raw_less(&pairs[i].1, &pairs[j].1, depth)
                })
            })
        };
        let replays = run.steps.iter().all(|s| {
            s.trace.replays(if s.direction == Direction::Forward {
                &full
            } else {
                &removed
            })
        });
        let ok = p.len() == 200
            && p.is_valid()
            && matches!(brute, Ok(true))
            && covered
            && members
            && monotone
            && replays;
        pass &= ok;
        details.push(format!(
            "{}: {} pairs, valid {}, bruteforce {:?}, covers first 100 {}, monotone {}",
            u.mode,
            p.len(),
            p.is_valid(),
            brute,
            covered,
            monotone
        ));
        reports.push(to_value(&run));
    }
    let took = t.elapsed();
    pass &= took <= Duration::from_secs(10);
    details.push(format!("{:.1}s", took.as_secs_f64()));
    outcome(pass, details.join("; "), reports)
}

fn qrule() -> BranchFamily {
    BranchFamily::rule(BranchRule::new(
        2,
        [Coord::zero(), Coord::one(), Coord::int(2)],
    ))
}

fn criterion5() -> Outcome {
    let t = Instant::now();
    let el = |m: Mode, x: &str| Element::parse(m, x).unwrap();
    let qfull = SubstructureSpec::full(Mode::Qtree, qrule());
    let mut qpoints = qfull.clone();
    for x in [
        "eta=[|0] odd={0:1}",
        "eta=[1|0] odd={}",
        "eta=[2,2|0] odd={1:1/2}",
    ] {
        qpoints.removals.explicit.insert(el(Mode::Qtree, x));
    }
    let ffull = SubstructureSpec::full(
        Mode::Fer,
        BranchFamily::rule(
            BranchRule::new(2, [Coord::zero(), Coord::one()])
                .with_tails([Coord::zero(), Coord::one()]),
        ),
    );
    let mut fpoints = ffull.without_designated();
    fpoints
        .removals
        .explicit
        .insert(el(Mode::Fer, "eta=[|0] odd={0:1}"));
    let finite = [
        qfull.clone(),
        qfull.without_designated(),
        qpoints,
        ffull.without_designated(),
        fpoints,
    ];

    let mut pass = true;
    let mut reports = Vec::new();
    for s in &finite {
        let rep = s.is_amenable(4).expect("well-formed spec");
        let searched = s
            .search_counterexample(&s.family.branches(), 4, &s.probe_values())
            .expect("well-formed spec");
        pass &= rep.verdict
            && matches!(rep.certificate, Certificate::Rule { .. })
            && searched.is_none();
        reports.push(to_value(&rep));
    }

    let mut coned = qfull;
    coned.removals.cones.push(ConeRule {
        branch: BranchSpec::constant(Coord::zero()),
        word: PrefixWord(vec![Coord::zero()]),
        value: Coord::int(5),
    });
    let rep = coned.is_amenable(4).expect("well-formed spec");
    let confirmed = match &rep.certificate {
        Certificate::Counterexample(c) => {
            matches!(coned.find_witness(c), Err(StructureError::NoWitness { .. }))
                && c.word.concat(c.value.clone()) == PrefixWord(vec![Coord::zero(), Coord::int(5)])
        }
        _ => false,
    };
    pass &= !rep.verdict && confirmed;
    reports.push(to_value(&rep));
    let took = t.elapsed();
    pass &= took <= Duration::from_secs(10);
    let detail = format!(
        "{} finite-removal specs accepted, cone spec rejected with {}, {:.1}s",
        finite.len(),
        serde_json::to_string(&rep.certificate).unwrap(),
        took.as_secs_f64()
    );
    outcome(pass, detail, reports)
}

fn criterion6() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    let mut reports = Vec::new();
    for u in [
        BoundedUniverse::standard_qtree(),
        BoundedUniverse::standard_fer(),
    ] {
        let rep = agreement_audit(&u, BUDGET).expect("universe within budget");
        pass &= rep.disagreements.is_empty()
            && rep.agreeing == rep.candidates
            && rep.valid < rep.candidates;
        details.push(format!(
            "{}: {}/{} agree ({} valid)",
            u.mode, rep.agreeing, rep.candidates, rep.valid
        ));
        reports.push(to_value(&rep));
    }
    outcome(pass, details.join("; "), reports)
}

fn meet(u: usize, v: usize, d: usize) -> usize {
    (0..d)
        .find(|&i| (u >> (d - 1 - i)) & 1 != (v >> (d - 1 - i)) & 1)
        .unwrap_or(d)
}

/// Counts by trying every permutation of the 2^d leaves.
fn permutation_count(d: usize, tagged: bool) -> usize {
    let n = 1usize << d;
    (0..n)
        .permutations(n)
        .filter(|f| {
            (0..n).all(|u| (0..n).all(|v| meet(u, v, d) == meet(f[u], f[v], d)))
                && (!tagged
                    || (0..n).all(|u| {
                        (0..d)
                            .step_by(2)
                            .all(|i| (u >> (d - 1 - i)) & 1 == (f[u] >> (d - 1 - i)) & 1)
                    }))
        })
        .count()
}

const UNTAGGED_GOLDEN: [usize; 5] = [1, 2, 8, 128, 32768];
const TAGGED_GOLDEN: [usize; 5] = [1, 1, 4, 4, 1024];

fn criterion7() -> Outcome {
    let mut pass = true;
    let mut reports = Vec::new();
    let mut counts = Vec::new();
    for d in 0..=4 {
        let plain = truncation_automorphisms(d, false, 1 << 20).expect("within budget");
        let tagged = truncation_automorphisms(d, true, 1 << 20).expect("within budget");
        let closed = 1usize << ((1usize << d) - 1);
        let tagged_closed = 1usize << (1..d).step_by(2).map(|i| 1usize << i).sum::<usize>();
        pass &= plain.count == closed && plain.count == UNTAGGED_GOLDEN[d];
        pass &= tagged.count == tagged_closed && tagged.count == TAGGED_GOLDEN[d];
        pass &= d == 0 || tagged.count < plain.count;
        if d <= 3 {
            pass &= plain.count == permutation_count(d, false)
                && tagged.count == permutation_count(d, true);
        }
        counts.push(format!("d{d} {}/{}", plain.count, tagged.count));
        reports.push(to_value(&plain));
        reports.push(to_value(&tagged));
    }
    outcome(
        pass,
        format!("untagged/tagged {}", counts.join(", ")),
        reports,
    )
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 7] = [
        (1, criterion1),
        (2, criterion2),
        (3, criterion3),
        (4, criterion4),
        (5, criterion5),
        (6, criterion6),
        (7, criterion7),
    ];
    let mut all = true;
    let mut first_reports = Vec::new();
    for (n, f) in criteria {
        let o = f();
        println!(
            "criterion {n}: {} ({})",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        all &= o.pass;
        first_reports.push(serde_json::to_string(&o.reports).unwrap());
    }

    // Element literals must be stable too, since reports embed them.
    let probe = Element::new(
        Mode::Qtree,
        BranchSpec::constant(Coord::zero()),
        OddPattern::empty(),
    )
    .unwrap();
    let mut identical = probe.literal() == "eta=[|0] odd={}";
    for ((_, f), first) in criteria.iter().zip(&first_reports) {
        let again = serde_json::to_string(&f().reports).unwrap();
        identical &= &again == first;
    }
    let bytes: usize = first_reports.iter().map(String::len).sum();
    println!(
        "criterion 8: {} (criteria 1-7 rerun, {bytes} report bytes compared)",
        if identical { "PASS" } else { "FAIL" }
    );
    all &= identical;

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
