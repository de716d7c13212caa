#![no_main]

use abohb::sim::EventTrace;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(trace) = EventTrace::read_jsonl(data) else { return };
    let mut out = Vec::new();
    trace.write_jsonl(&mut out).expect("write to memory");
    let back = EventTrace::read_jsonl(out.as_slice()).expect("own output parses");
    assert_eq!(back, trace);
    assert!(trace.incumbent.windows(2).all(|w| w[1].1 < w[0].1));
});
