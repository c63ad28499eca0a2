#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(candidates) = grouplink::io::parse_candidates(data) {
        let mut out = Vec::new();
        grouplink::io::write_candidates(&mut out, &candidates).unwrap();
        assert_eq!(grouplink::io::parse_candidates(out.as_slice()).unwrap(), candidates);
    }
});
