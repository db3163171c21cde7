#ifndef LCNET_H
#define LCNET_H

/* Generated by cbindgen from the lcnet-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of generalized classes; the length of one probability row.
 */
#define LCNET_CLASS_COUNT 5

/**
 * Result code of a fallible call. Anything other than `Ok` leaves an
 * explanation in [`lcnet_last_error_message`].
 */
typedef enum LcnetStatus {
  /**
   * The call succeeded.
   */
  LCNET_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  LCNET_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  LCNET_STATUS_INVALID_UTF8 = 2,
  /**
   * The operating system reported an i/o failure.
   */
  LCNET_STATUS_IO = 3,
  /**
   * Input was rejected: bad schema, corrupt file, missing labels or an
   * out-of-range value.
   */
  LCNET_STATUS_DATA = 4,
  /**
   * A configuration value was out of range.
   */
  LCNET_STATUS_CONFIG = 5,
  /**
   * The output buffer is smaller than the result.
   */
  LCNET_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A panic was caught at the boundary; the handle that produced it
   * should be considered unusable.
   */
  LCNET_STATUS_PANIC = 7,
} LcnetStatus;

/**
 * An in-memory set of light curves, in first-appearance order. Opaque;
 * create with [`lcnet_dataset_from_csv`] or [`lcnet_dataset_synthetic`].
 */
typedef struct LcnetDataset LcnetDataset;

/**
 * A trained classifier plus the preprocessing settings it expects. Opaque;
 * create with [`lcnet_model_train`] or [`lcnet_model_load`].
 */
typedef struct LcnetModel LcnetModel;

/**
 * Training hyperparameters. Obtain defaults with
 * [`lcnet_train_options_default`] and override fields as needed.
 */
typedef struct LcnetTrainOptions {
  /**
   * LSTM hidden width per direction, at least 1.
   */
  size_t hidden_size;
  /**
   * Upper bound on training epochs.
   */
  size_t max_epochs;
  /**
   * Mini-batch size, at least 1.
   */
  size_t batch_size;
  /**
   * Adam learning rate.
   */
  double learning_rate;
  /**
   * Epochs without validation improvement before stopping early.
   */
  size_t patience;
  /**
   * Fraction of the input held out for validation, in (0, 1) exclusive.
   */
  double validation_fraction;
  /**
   * Seed for initialization, shuffling and the validation split.
   */
  uint64_t seed;
  /**
   * Weight classes by inverse frequency instead of uniformly.
   */
  bool balanced_class_weights;
} LcnetTrainOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *lcnet_version(void);

/**
 * Display name of a generalized class index (0-4) as a static string, or
 * null when the index is out of range. The index matches the position of
 * the class in every probability row and report array.
 */
const char *lcnet_class_name(size_t class_index);

/**
 * Explanation of the most recent failure on the calling thread, or null
 * when no failure has been recorded. The pointer stays valid until the
 * next library call from the same thread.
 */
const char *lcnet_last_error_message(void);

/**
 * Reads a measurement table from a CSV file. With `has_labels` the class
 * column is required and remapped to the five generalized classes; without
 * it the dataset is prediction-only input. On success `*out_dataset`
 * receives a new handle.
 */
enum LcnetStatus lcnet_dataset_from_csv(const char *path,
                                        bool has_labels,
                                        struct LcnetDataset **out_dataset);

/**
 * Writes a dataset in the tabular input format. With `include_labels` the
 * class column carries the original class ids, so the file can be read
 * back with `has_labels` set.
 */
enum LcnetStatus lcnet_dataset_to_csv(const struct LcnetDataset *dataset,
                                      const char *path,
                                      bool include_labels);

/**
 * Generates a labeled synthetic dataset with `objects_per_class` objects
 * of each class. Deterministic: equal arguments give byte-identical
 * datasets.
 */
enum LcnetStatus lcnet_dataset_synthetic(size_t objects_per_class,
                                         uint64_t seed,
                                         struct LcnetDataset **out_dataset);

/**
 * Number of objects in the dataset, or 0 when `dataset` is null.
 */
size_t lcnet_dataset_len(const struct LcnetDataset *dataset);

/**
 * Object id at `index`; indices follow dataset order, the same order
 * prediction rows are written in.
 */
enum LcnetStatus lcnet_dataset_object_id(const struct LcnetDataset *dataset,
                                         size_t index,
                                         uint64_t *out_object_id);

/**
 * Releases a dataset handle.
 */
void lcnet_dataset_free(struct LcnetDataset *dataset);

/**
 * The library defaults: hidden width 64, up to 50 epochs, batch 32,
 * learning rate 0.001, patience 5, a 10% validation split, seed 0 and
 * uniform class weights.
 */
struct LcnetTrainOptions lcnet_train_options_default(void);

/**
 * Trains a classifier on a labeled dataset. A stratified validation split
 * is carved out of the input; initialization, shuffling and the split all
 * derive from `options->seed`, so equal inputs give equal models. Training
 * runs on the calling thread and may take a while for large inputs.
 */
enum LcnetStatus lcnet_model_train(const struct LcnetDataset *dataset,
                                   const struct LcnetTrainOptions *options,
                                   struct LcnetModel **out_model);

/**
 * Loads a model checkpoint from a file.
 */
enum LcnetStatus lcnet_model_load(const char *path, struct LcnetModel **out_model);

/**
 * Saves a model checkpoint to a file. Loading it back reproduces the same
 * parameters bit for bit.
 */
enum LcnetStatus lcnet_model_save(const struct LcnetModel *model, const char *path);

/**
 * Hidden width per direction, or 0 when `model` is null.
 */
size_t lcnet_model_hidden_size(const struct LcnetModel *model);

/**
 * Class probabilities for every object, written row-major into
 * `out_probabilities`: one row of [`LCNET_CLASS_COUNT`] doubles per object
 * in dataset order, each row summing to 1. `capacity` is the buffer length
 * in doubles and must be at least `lcnet_dataset_len() * LCNET_CLASS_COUNT`.
 * `out_rows` may be null; when given it receives the number of rows
 * written.
 */
enum LcnetStatus lcnet_model_predict(const struct LcnetModel *model,
                                     const struct LcnetDataset *dataset,
                                     double *out_probabilities,
                                     size_t capacity,
                                     size_t *out_rows);

/**
 * Evaluates the model on a labeled dataset and returns a JSON report with
 * accuracy, per-class ROC and PR AUC and the confusion matrix. A positive
 * `horizon_days` keeps only the measurements within that many days after
 * each object's first detection (objects without detections are dropped
 * and counted in the report); zero or negative uses full curves. On
 * success `*out_report_json` receives a NUL-terminated string owned by the
 * caller; release it with [`lcnet_string_free`].
 */
enum LcnetStatus lcnet_model_evaluate(const struct LcnetModel *model,
                                      const struct LcnetDataset *dataset,
                                      double horizon_days,
                                      char **out_report_json);

/**
 * Releases a string returned through an out-parameter.
 */
void lcnet_string_free(char *string);

/**
 * Releases a model handle.
 */
void lcnet_model_free(struct LcnetModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LCNET_H */
