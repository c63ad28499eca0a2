#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(log) = grouplink::io::parse_provenance_log(data) {
        let mut out = Vec::new();
        grouplink::io::write_provenance_log(&mut out, &log).unwrap();
        assert_eq!(grouplink::io::parse_provenance_log(out.as_slice()).unwrap(), log);
    }
});
