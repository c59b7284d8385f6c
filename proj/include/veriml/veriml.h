#ifndef VERIML_H
#define VERIML_H

#include <stddef.h>
#include <stdint.h>

#if defined(VERIML_BUILDING_LIBRARY)
#define VERIML_API __attribute__((visibility("default")))
#else
#define VERIML_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. 2, 3 and 4 double as the CLI exit codes. */
typedef enum veriml_status {
  VERIML_OK = 0,
  VERIML_E_VALIDATION = 2, /* bad scenario config; message lists every field */
  VERIML_E_FIXTURE = 3,    /* fixture training or probe setup failed */
  VERIML_E_INVARIANT = 4,  /* internal invariant violated */
  VERIML_E_PARAMETER = 5,
  VERIML_E_FORMAT = 6,     /* malformed serialized model or report */
  VERIML_E_PROTOCOL = 7,
  VERIML_E_ACCESS = 8,
  VERIML_E_NULL = 9,       /* a required pointer argument was NULL */
  VERIML_E_INTERNAL = 10
} veriml_status;

typedef struct veriml_config veriml_config;
typedef struct veriml_report veriml_report;
typedef struct veriml_model veriml_model;

typedef struct veriml_run_options {
  size_t jobs;       /* 0 or 1 runs trials sequentially */
  int has_seed;      /* nonzero: seed replaces the config's master_seed */
  uint64_t seed;
} veriml_run_options;

VERIML_API const char* veriml_version(void);

/* Message for the last failing call on this thread; "" if none. */
VERIML_API const char* veriml_last_error(void);

/* Frees strings and byte buffers returned through out-parameters. */
VERIML_API void veriml_string_free(char* s);
VERIML_API void veriml_bytes_free(uint8_t* b);

/* Scenario configs. */
VERIML_API veriml_status veriml_config_parse(const char* json, veriml_config** out);
VERIML_API veriml_status veriml_config_default(const char* scenario, veriml_config** out);
VERIML_API veriml_status veriml_config_to_json(const veriml_config* cfg, char** out);
/* Replaces the numeric field at a dotted path, e.g. "provider.cheat_rate". */
VERIML_API veriml_status veriml_config_set(veriml_config* cfg, const char* param, double value);
VERIML_API void veriml_config_free(veriml_config* cfg);

/* Runs. `opts` may be NULL. */
VERIML_API veriml_status veriml_run(const veriml_config* cfg, const veriml_run_options* opts, veriml_report** out);
/* Writes n_values reports into `out`, one per value, in order. */
VERIML_API veriml_status veriml_sweep(const veriml_config* cfg, const char* param, const double* values,
                                      size_t n_values, const veriml_run_options* opts, veriml_report** out);
/* Auditor run that also returns the ledger export as JSON lines. */
VERIML_API veriml_status veriml_auditor_demo(const veriml_config* cfg, const veriml_run_options* opts,
                                             veriml_report** out, char** ledger_jsonl);
/* Brute-force checks of the statistics code; *failures is 0 when all pass. */
VERIML_API veriml_status veriml_selftest(char** text, int* failures);

/* Reports. */
VERIML_API veriml_status veriml_report_to_json(const veriml_report* r, char** out);
VERIML_API veriml_status veriml_report_from_json(const char* json, veriml_report** out);
VERIML_API veriml_status veriml_report_explain(const veriml_report* r, size_t trial_index, char** out);
VERIML_API size_t veriml_report_trial_count(const veriml_report* r);
VERIML_API double veriml_report_detection_rate(const veriml_report* r);
VERIML_API void veriml_report_free(veriml_report* r);

/* MLP classifiers (softmax head). */
VERIML_API veriml_status veriml_model_init(const size_t* dims, size_t n_dims, uint64_t seed, veriml_model** out);
VERIML_API size_t veriml_model_input_dim(const veriml_model* m);
VERIML_API size_t veriml_model_output_dim(const veriml_model* m);
VERIML_API veriml_status veriml_model_forward(const veriml_model* m, const double* x, size_t n_x, double* probs,
                                              size_t n_probs);
VERIML_API veriml_status veriml_model_serialize(const veriml_model* m, uint8_t** bytes, size_t* len);
VERIML_API veriml_status veriml_model_deserialize(const uint8_t* bytes, size_t len, veriml_model** out);
VERIML_API void veriml_model_free(veriml_model* m);

/* HMAC-SHA-256 and response certificates. */
VERIML_API veriml_status veriml_hmac_sha256(const uint8_t* key, size_t key_len, const uint8_t* msg, size_t msg_len,
                                            uint8_t out[32]);
VERIML_API veriml_status veriml_certificate_issue(const uint8_t key[32], const double* x, size_t n_x,
                                                  const double* probs, size_t n_probs, const uint8_t nonce[16],
                                                  uint8_t tag[32]);
/* *valid is 1 when the tag verifies, 0 otherwise. */
VERIML_API veriml_status veriml_certificate_verify(const uint8_t* key, size_t key_len, const double* x, size_t n_x,
                                                   const double* probs, size_t n_probs, const uint8_t nonce[16],
                                                   const uint8_t* tag, size_t tag_len, int* valid);

#ifdef __cplusplus
}
#endif

#endif
