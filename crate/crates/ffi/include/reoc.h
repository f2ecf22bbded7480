#ifndef REOC_H
#define REOC_H

#include <stdbool.h>
#include <stddef.h>

typedef enum ReocStatus {
  REOC_STATUS_OK = 0,
  REOC_STATUS_NULL_ARGUMENT = 1,
  REOC_STATUS_INVALID_UTF8 = 2,
  REOC_STATUS_INVALID_INPUT = 3,
  REOC_STATUS_BUDGET_EXCEEDED = 4,
  REOC_STATUS_DEADLOCK = 5,
  REOC_STATUS_INDEX_OUT_OF_RANGE = 6,
} ReocStatus;

typedef enum ReocStrategy {
  REOC_STRATEGY_CENTRALIZED = 0,
  REOC_STRATEGY_DISTRIBUTED = 1,
  REOC_STRATEGY_MIDDLEGROUND = 2,
  REOC_STRATEGY_MIXED = 3,
} ReocStrategy;

// A validated connector.
typedef struct ReocConnector ReocConnector;

// A connector compiled under one strategy.
typedef struct ReocProtocol ReocProtocol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *reoc_last_error_message(void);

// # Safety
// `s` is null or was returned by this library and not yet freed.
void reoc_string_free(char *s);

// Parses connector source text.
//
// # Safety
// `source` is a NUL-terminated string; `out` is a valid pointer.
enum ReocStatus reoc_connector_parse(const char *source, struct ReocConnector **out);

// Generates a member of a named family (`alternator`, `asyncmerger`,
// `sequencer`, `sync_chain`).
//
// # Safety
// `family` is a NUL-terminated string; `out` is a valid pointer.
enum ReocStatus reoc_connector_generate(const char *family,
                                        size_t size,
                                        struct ReocConnector **out);

// # Safety
// `c` is null or a handle from this library not yet freed.
void reoc_connector_free(struct ReocConnector *c);

// Source text of the connector; free with [`reoc_string_free`].
//
// # Safety
// `c` is a live handle; `out` is a valid pointer.
enum ReocStatus reoc_connector_source(const struct ReocConnector *c, char **out);

// Compiles over the connector's declared (or agnostic) data domain.
//
// # Safety
// `c` is a live handle; `out` is a valid pointer.
enum ReocStatus reoc_compile(const struct ReocConnector *c,
                             enum ReocStrategy strategy,
                             size_t budget,
                             struct ReocProtocol **out);

// # Safety
// `p` is null or a handle from this library not yet freed.
void reoc_protocol_free(struct ReocProtocol *p);

// Number of units; 0 for a null handle.
//
// # Safety
// `p` is null or a live handle.
size_t reoc_protocol_unit_count(const struct ReocProtocol *p);

// State and transition count of unit `index`.
//
// # Safety
// `p` is a live handle; `states` and `transitions` are valid pointers.
enum ReocStatus reoc_protocol_unit_size(const struct ReocProtocol *p,
                                        size_t index,
                                        size_t *states,
                                        size_t *transitions);

// Unit `index` as automaton JSON; free with [`reoc_string_free`].
//
// # Safety
// `p` is a live handle; `out` is a valid pointer.
enum ReocStatus reoc_protocol_unit_json(const struct ReocProtocol *p, size_t index, char **out);

// Whether two connectors are bisimilar on their boundary, pairing external
// ports in sorted order.
//
// # Safety
// `a`, `b` are live handles; `equivalent` is a valid pointer.
enum ReocStatus reoc_equivalent(const struct ReocConnector *a,
                                const struct ReocConnector *b,
                                size_t budget,
                                bool *equivalent);

// Runs the connector against a JSON stimulus script and writes the trace
// as JSON. A run that cannot finish still writes its trace and returns
// [`ReocStatus::Deadlock`].
//
// # Safety
// `c` is a live handle; `script` is a NUL-terminated string; `trace_json`
// is a valid pointer.
enum ReocStatus reoc_run(const struct ReocConnector *c,
                         enum ReocStrategy strategy,
                         const char *script,
                         char **trace_json);

// Checks harness output lines (`P1,P2;p1=v1,p2=v2`) against the
// connector's centralized automaton over `domain_json`, a JSON array of
// literals (null for the connector's own domain).
//
// # Safety
// `c` is a live handle; `trace_lines` is a NUL-terminated string;
// `domain_json` is null or NUL-terminated; `accepted` is a valid pointer.
enum ReocStatus reoc_validate_trace(const struct ReocConnector *c,
                                    const char *trace_lines,
                                    const char *domain_json,
                                    bool *accepted);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REOC_H */
