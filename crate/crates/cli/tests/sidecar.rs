use wmark::watermark::CdmaParams;
use wmark::{AcceptRule, Algorithm, Layout, Mode, PadPolicy};
use wmark_cli::Sidecar;

fn sample() -> Sidecar {
    Sidecar {
        layout: Layout {
            algo: Algorithm::Cdma,
            mode: Mode::Original,
            seed: u64::MAX,
            width: 70,
            height: 40,
            k: 32,
            pad: PadPolicy::ReplicateEdge,
            block_bits: vec![0, 4, 256, 12, 8, 1000],
            dct_skip: 64,
            dwt_levels: 2,
            cdma: CdmaParams {
                group_size: 4,
                code_len: 128,
                gain: 0.1 + 0.2,
            },
        },
        thr2: 0.7999999999999999,
        accept_rule: AcceptRule::FirstBelow,
    }
}

#[test]
fn parse_inverts_serialize() {
    let sc = sample();
    let text = sc.serialize();
    assert_eq!(Sidecar::parse(&text).unwrap(), sc);
    assert_eq!(Sidecar::parse(&text).unwrap().serialize(), text);
    assert!(text.contains("block_bits=0,4,256,12,8,1000\n"));
}

#[test]
fn comments_and_order_are_free() {
    let text = sample().serialize();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.reverse();
    let shuffled = format!("# written by hand\n\n{}\n", lines.join("\n"));
    assert_eq!(Sidecar::parse(&shuffled).unwrap(), sample());
}

#[test]
fn invalid_sidecars() {
    let text = sample().serialize();
    let cases = [
        text.replace("block_bits=0,4,256,12,8,1000", "block_bits=0,4"),
        text.replace("algo=cdma", "algo=fft"),
        text.replace("seed=", "sead="),
        text.replace("cdma_code_len=128", "cdma_code_len=100"),
        text.replace("pad=replicate_edge", "pad=reject"),
        format!("{text}k=32\n"),
        text.lines().filter(|l| !l.starts_with("thr2")).collect::<Vec<_>>().join("\n"),
    ];
    for bad in cases {
        assert!(Sidecar::parse(&bad).is_err(), "{bad}");
    }
}

#[test]
fn empty_block_list() {
    let mut sc = sample();
    sc.layout.width = 0;
    sc.layout.block_bits.clear();
    // a zero-sized grid is rejected before the list is compared
    assert!(Sidecar::parse(&sc.serialize()).is_err());
}
