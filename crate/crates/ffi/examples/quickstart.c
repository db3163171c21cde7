/* Minimal end-to-end use of the C API: generate a labeled dataset, train a
 * tiny model, print probabilities for one object and an evaluation report.
 *
 * Build from the repository root after `cargo build -p lcnet-ffi`:
 *
 *   cc crates/ffi/examples/quickstart.c target/debug/liblcnet_ffi.a \
 *      -Icrates/ffi/include -lpthread -ldl -lm -o quickstart
 */
#include <stdio.h>
#include <stdlib.h>

#include "lcnet.h"

static int check(LcnetStatus status, const char *what) {
  if (status != LCNET_STATUS_OK) {
    fprintf(stderr, "%s failed (%d): %s\n", what, (int)status,
            lcnet_last_error_message());
    return 1;
  }
  return 0;
}

int main(void) {
  printf("lcnet %s\n", lcnet_version());

  LcnetDataset *data = NULL;
  if (check(lcnet_dataset_synthetic(4, 7, &data), "synthesis"))
    return 1;

  LcnetTrainOptions options = lcnet_train_options_default();
  options.hidden_size = 4;
  options.max_epochs = 2;
  options.batch_size = 8;
  options.validation_fraction = 0.25;

  LcnetModel *model = NULL;
  if (check(lcnet_model_train(data, &options, &model), "training"))
    return 1;

  size_t n = lcnet_dataset_len(data);
  double *probs = malloc(n * LCNET_CLASS_COUNT * sizeof(double));
  if (probs == NULL)
    return 1;
  size_t rows = 0;
  if (check(lcnet_model_predict(model, data, probs, n * LCNET_CLASS_COUNT, &rows),
            "prediction"))
    return 1;

  uint64_t object_id = 0;
  if (check(lcnet_dataset_object_id(data, 0, &object_id), "object lookup"))
    return 1;
  printf("object %llu:", (unsigned long long)object_id);
  for (size_t k = 0; k < LCNET_CLASS_COUNT; k++)
    printf(" %s=%.4f", lcnet_class_name(k), probs[k]);
  printf("\n");

  char *report = NULL;
  if (check(lcnet_model_evaluate(model, data, -1.0, &report), "evaluation"))
    return 1;
  printf("%s\n", report);

  lcnet_string_free(report);
  free(probs);
  lcnet_model_free(model);
  lcnet_dataset_free(data);
  printf("ok\n");
  return 0;
}
