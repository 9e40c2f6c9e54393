//! Serialization round trips for the deep report types: parse(serialize(x))
//! reproduces x byte-for-byte when re-serialized.

use morifan::corpus;
use morifan::divisor::canonical_divisor;
use morifan::geography::{auto_slice_param, chamber_decomposition, GeographySlice};
use morifan::io::{from_json, to_json_pretty};
use morifan::mmp::{run_mmp, MmpTrace, Strategy};
use morifan::sarkisov::{factorize, FactorizeOptions, SarkisovChain};

fn round_trip<T: serde::Serialize + for<'de> serde::Deserialize<'de>>(value: &T) -> String {
    let text = to_json_pretty(value).unwrap();
    let parsed: T = from_json(&text).unwrap();
    let text2 = to_json_pretty(&parsed).unwrap();
    assert_eq!(text, text2, "re-serialization is byte-identical");
    text
}

#[test]
fn trace_round_trip() {
    let z = corpus::hirzebruch(1);
    let k = canonical_divisor(&z.fan);
    let trace = run_mmp(&z, &k, &Strategy::DeterministicLex, 100).unwrap();
    round_trip::<MmpTrace>(&trace);
}

#[test]
fn slice_round_trip() {
    let z = corpus::hirzebruch(1);
    let k = canonical_divisor(&z.fan);
    let param = auto_slice_param(&z, &k, 3, 3).unwrap();
    let slice = chamber_decomposition(&z, &param).unwrap();
    round_trip::<GeographySlice>(&slice);
}

#[test]
fn chain_round_trip() {
    let z = corpus::p1_cross_p1();
    let k = canonical_divisor(&z.fan);
    let mut traces = Vec::new();
    for seed in 0..32u64 {
        let t = run_mmp(&z, &k, &Strategy::SeededRandom { seed }, 100).unwrap();
        if t.is_mfs() {
            let dup = traces.iter().any(|t2: &MmpTrace| {
                t2.final_model().same_model(t.final_model())
                    && morifan::geography::mfs_models(t2)
                        .unwrap()
                        .1
                        .same_model(&morifan::geography::mfs_models(&t).unwrap().1)
            });
            if !dup {
                traces.push(t);
            }
        }
        if traces.len() == 2 {
            break;
        }
    }
    let chain = factorize(&z, &k, &traces[0], &traces[1], &FactorizeOptions::default()).unwrap();
    let text = round_trip::<SarkisovChain>(&chain);
    assert!(text.contains("IVm"));
}
