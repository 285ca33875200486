/* End-to-end exercise of the C ABI: synthesize a CSV, fit, inspect,
 * embed, classify, check the error path, and round-trip the model.
 *
 * Build from the repo root after `cargo build --release`:
 *   cc -std=c99 -Wall -Wextra -I crates/ffi/include \
 *      crates/ffi/examples/smoke.c target/release/libdmm_ffi.a -lm -o smoke
 */
#include <assert.h>
#include <stdio.h>
#include <string.h>
#include "dmm.h"

int main(void) {
    FILE *f = fopen("/tmp/smoke_train.csv", "w");
    if (!f) {
        perror("fopen");
        return 1;
    }
    fputs("color,size,label\n", f);
    for (int i = 0; i < 30; i++)
        fprintf(f, "%s,%s,%s\n", (const char*[]){"r","g","b"}[i % 3],
                (const char*[]){"s","l"}[i % 2], i % 3 == 0 ? "yes" : "no");
    fclose(f);

    DmmDataset *ds = NULL;
    if (dmm_dataset_load_csv("/tmp/smoke_train.csv", NULL, &ds) != DMM_STATUS_OK) {
        fprintf(stderr, "load: %s\n", dmm_last_error());
        return 1;
    }
    printf("rows=%zu blocks=%zu dim=%zu classes=%zu\n",
           dmm_dataset_rows(ds), dmm_dataset_blocks(ds),
           dmm_dataset_dim(ds), dmm_dataset_classes(ds));

    DmmModel *model = NULL;
    DmmFitOptions opts = dmm_fit_options_default();
    opts.priors = DMM_PRIOR_MODE_EMPIRICAL;
    if (dmm_model_fit(ds, &opts, &model) != DMM_STATUS_OK) {
        fprintf(stderr, "fit: %s\n", dmm_last_error());
        return 1;
    }
    size_t rank = dmm_model_rank(model);
    double coords[8];
    const char *row[2] = {"r", "s"};
    assert(dmm_model_embed_row(model, row, 2, coords, 8) == DMM_STATUS_OK);
    size_t label = 0;
    assert(dmm_model_classify_row(model, row, 2, DMM_RULE_MAXIMUM_LIKELIHOOD, &label) == DMM_STATUS_OK);
    printf("version=%s rank=%zu z0=%.6f predicted=%s\n",
           dmm_version(), rank, coords[0], dmm_model_label(model, label));
    assert(strcmp(dmm_model_label(model, label), "yes") == 0);

    /* Error path: null arguments are reported, never dereferenced. */
    DmmModel *bogus = NULL;
    assert(dmm_model_fit(NULL, NULL, &bogus) == DMM_STATUS_NULL_ARGUMENT);
    assert(bogus == NULL);
    printf("null fit error=\"%s\"\n", dmm_last_error());

    assert(dmm_model_save(model, "/tmp/smoke_model.json") == DMM_STATUS_OK);
    DmmModel *again = NULL;
    assert(dmm_model_load("/tmp/smoke_model.json", &again) == DMM_STATUS_OK);
    size_t label2 = 0;
    assert(dmm_model_classify_row(again, row, 2, DMM_RULE_MAXIMUM_A_POSTERIORI, &label2) == DMM_STATUS_OK);
    printf("reloaded map prediction=%s\n", dmm_model_label(again, label2));

    dmm_model_free(again);
    dmm_model_free(model);
    dmm_dataset_free(ds);
    puts("C smoke test passed");
    return 0;
}
