use offbench_core::experiment::{analyze, read_records, read_records_file, AnalysisReport};
use offbench_core::{Error, OpKind};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/synthetic_live.csv");
const GOLDEN: &str = include_str!("fixtures/synthetic_live.golden");
const REPORT: &str = include_str!("fixtures/synthetic_live.report.txt");

fn report() -> AnalysisReport {
    analyze(&read_records_file(FIXTURE).unwrap()).unwrap()
}

fn close(got: f64, want: f64, what: &str) {
    assert!((got - want).abs() <= 1e-9, "{what}: got {got}, want {want}");
}

#[test]
fn measures_match_hand_computed_values() {
    let r = report();
    let mut checked = 0;
    for line in GOLDEN.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let op: OpKind = f[1].parse().unwrap();
        let n: usize = f[2].parse().unwrap();
        let g = r.group(op, n).unwrap();
        let num = |i: usize| f[i].parse::<f64>().unwrap();
        match f[0] {
            "cell" => {
                let c = g.cell(f[3], f[4].parse().unwrap()).unwrap();
                close(c.summary.local_mean, num(5), line);
                close(c.summary.local_ci.unwrap().half_width, num(6), line);
                close(c.summary.remote_mean, num(7), line);
                close(c.summary.remote_ci.unwrap().half_width, num(8), line);
                close(c.marshalling_ratio, num(9), line);
                close(c.alt_to_baseline, num(10), line);
                assert_eq!(c.decision.to_string(), f[11], "{line}");
                assert_eq!(u8::from(c.summary.is_border()).to_string(), f[12], "{line}");
            }
            "decision" => {
                let bits: String = g.decision(f[3]).unwrap().bits.iter().map(u8::to_string).collect();
                assert_eq!(bits, f[4], "{line}");
            }
            "penalty" => close(g.penalties.get(f[3]).unwrap(), num(4), line),
            other => panic!("unknown golden record {other}"),
        }
        checked += 1;
    }
    assert_eq!(checked, 32);
}

#[test]
fn report_text_is_byte_exact() {
    assert_eq!(report().render_text(), REPORT);
}

#[test]
fn flags_border_and_clamped_cells() {
    let r = report();
    let g = r.group(OpKind::Inv, 200).unwrap();
    assert!(g.cell("RAW", 10_000_000).unwrap().summary.is_border());
    assert_eq!(g.cell("RAW", 100_000_000).unwrap().summary.inconsistent, 1);
}

#[test]
fn dropped_rate_names_missing_cell() {
    let text = std::fs::read_to_string(FIXTURE).unwrap();
    let kept: String =
        text.lines().filter(|l| !(l.starts_with("live,MUL,200,100000000,RAW,"))).map(|l| format!("{l}\n")).collect();
    match analyze(&read_records(kept.as_bytes()).unwrap()) {
        Err(Error::IncompleteGrid(m)) => assert_eq!(m, "missing cells: op=MUL n=200 codec=RAW rate_bps=100000000"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn summary_csv_has_one_row_per_cell() {
    let r = report();
    let mut buf = Vec::new();
    r.write_summary_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + 16);
    assert_eq!(text.lines().next().unwrap(), AnalysisReport::SUMMARY_HEADER.join(","));
}
