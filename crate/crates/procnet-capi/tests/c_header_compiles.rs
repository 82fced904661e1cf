//! The header must stand alone as C: compile a small consumer with `cc`.

use std::process::Command;

#[test]
fn header_compiles_as_c() {
    let crate_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let include = crate_dir.join("include");
    let out_dir = std::env::temp_dir().join("procnet-capi-ctest");
    std::fs::create_dir_all(&out_dir).unwrap();
    let src = out_dir.join("consumer.c");
    std::fs::write(
        &src,
        r#"
#include "procnet.h"
#include <stdio.h>

int check(void) {
    uint8_t key[16] = {0};
    uint8_t block[8] = {0};
    uint8_t out[8] = {0};
    PnStatus st = pn_kasumi_encrypt(key, block, out);
    if (st != PN_OK) {
        printf("%s\n", pn_status_message(st));
        return 1;
    }
    PnNetwork *net = NULL;
    if (pn_network_new("d3", &net) != PN_OK) return 1;
    PnCostSummary summary;
    if (pn_network_measure(net, key, 2, 0, &summary) != PN_OK) return 1;
    pn_network_free(net);
    return summary.channel_events > 0 ? 0 : 1;
}
"#,
    )
    .unwrap();
    let obj = out_dir.join("consumer.o");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-c")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg("-o")
        .arg(&obj)
        .status()
        .expect("cc not available");
    assert!(status.success(), "header failed to compile as C99");
}
