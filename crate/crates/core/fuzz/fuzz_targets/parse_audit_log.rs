#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(removed) = grouplink::io::parse_audit_log(data) {
        let mut out = Vec::new();
        grouplink::io::write_audit_log(&mut out, &removed).unwrap();
        assert_eq!(grouplink::io::parse_audit_log(out.as_slice()).unwrap(), removed);
    }
});
