#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(g) = s.parse::<grouplink::cleanup::Gamma>() {
        assert_eq!(g.to_string().parse::<grouplink::cleanup::Gamma>(), Ok(g));
    }
    if let Ok(p) = s.parse::<grouplink::pipeline::Preset>() {
        assert_eq!(p.name().parse::<grouplink::pipeline::Preset>(), Ok(p));
    }
    let _ = grouplink::io::parse_blocking_list(s);
    let _ = s.parse::<grouplink::datagen::Split>();
    let _ = s.parse::<grouplink::pipeline::DatasetKind>();
    let _ = s.parse::<grouplink::datagen::ArtifactKind>();
});
