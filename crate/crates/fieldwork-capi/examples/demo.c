/* Minimal C consumer of the fieldwork C ABI.
 *
 * Build (from the workspace root, after `cargo build -p fieldwork-capi`):
 *
 *   gcc -std=c99 -D_GNU_SOURCE -Wall -Wextra -Werror \
 *       -Icrates/fieldwork-capi/include \
 *       crates/fieldwork-capi/examples/demo.c \
 *       -Ltarget/debug -lfieldwork_capi -lm -o demo
 *   LD_LIBRARY_PATH=target/debug ./demo
 */
#include <stdio.h>
#include <math.h>
#include <string.h>
#include "fieldwork.h"

int main(void) {
    FwFieldConfig *cfg = NULL;
    int code = fw_field_config_new_gaussian(1, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, &cfg);
    if (code != FW_OK) { fprintf(stderr, "config: %d\n", code); return 1; }

    double k1 = 0.0;
    code = fw_field_cumulant(cfg, 1, &k1);
    if (code != FW_OK) { fprintf(stderr, "cumulant: %d\n", code); return 1; }
    double expected = pow(M_PI, 1.5) / 4.0;
    if (fabs(k1 - expected) > 1e-12) { fprintf(stderr, "kappa1 %.17g vs %.17g\n", k1, expected); return 1; }

    /* Error path: strip violation must report code 2 and a message. */
    double re, im;
    code = fw_field_char_work(cfg, 0.0, 2.0, &re, &im);
    if (code != FW_EVALIDATION) { fprintf(stderr, "strip code %d\n", code); return 1; }
    char msg[256];
    size_t n = fw_last_error(msg, sizeof msg);
    if (n == 0 || strstr(msg, "strip") == NULL) { fprintf(stderr, "msg: %s\n", msg); return 1; }

    fw_field_config_free(cfg);

    const char *doc =
        "{\"version\":1,\"beta\":1.0,"
        "\"h0\":[[[0,0],[0,0]],[[0,0],[1,0]]],"
        "\"htau\":[[[0,0],[0,0]],[[0,0],[1,0]]],"
        "\"u\":[[[0.7071067811865476,0],[0.7071067811865476,0]],"
        "[[0.7071067811865476,0],[-0.7071067811865476,0]]]}";
    FwProcess *p = NULL;
    code = fw_process_from_json(doc, &p);
    if (code != FW_OK) { fprintf(stderr, "process: %d\n", code); return 1; }
    code = fw_jarzynski(p, &re, &im);
    if (code != FW_OK || fabs(re - 1.0) > 1e-12 || fabs(im) > 1e-12) {
        fprintf(stderr, "jarzynski: %d %.17g %.17g\n", code, re, im); return 1;
    }
    fw_process_free(p);

    printf("C consumer OK: kappa1 = %.17g, version = %s\n", k1, fw_version());
    return 0;
}
