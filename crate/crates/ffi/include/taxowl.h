#ifndef TAXOWL_H
#define TAXOWL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TaxowlStatus {
  TAXOWL_STATUS_OK = 0,
  // Conversion finished but at least one name failed.
  TAXOWL_STATUS_PARTIAL = 1,
  TAXOWL_STATUS_INVALID_ARGUMENT = 2,
  // The backbone transport could not be opened or used.
  TAXOWL_STATUS_TRANSPORT = 3,
  TAXOWL_STATUS_INVALID_NAME = 4,
  TAXOWL_STATUS_PARSE = 5,
  TAXOWL_STATUS_MERGE = 6,
  TAXOWL_STATUS_INTERNAL = 99,
} TaxowlStatus;

// Opaque conversion session.
typedef struct TaxowlSession TaxowlSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Opens a session that replays a recorded corpus directory.
//
// # Safety
// `dir` must be a valid C string and `out` a writable pointer.
enum TaxowlStatus taxowl_session_open_fixtures(const char *dir, struct TaxowlSession **out);

// Opens a session that serves from a cache directory and fetches misses
// from `base_url` (the public API when null).
//
// # Safety
// `dir` must be a valid C string, `base_url` a valid C string or null,
// and `out` a writable pointer.
enum TaxowlStatus taxowl_session_open_cache(const char *dir,
                                            const char *base_url,
                                            struct TaxowlSession **out);

// Opens a session against the live API. `base_url` may be null.
//
// # Safety
// `base_url` must be a valid C string or null, and `out` a writable pointer.
enum TaxowlStatus taxowl_session_open_live(const char *base_url, struct TaxowlSession **out);

// Sets the fuzzy-match threshold (0 to 100) and whether every fuzzy match
// is accepted.
//
// # Safety
// `session` must come from one of the open functions.
enum TaxowlStatus taxowl_session_set_fuzzy(struct TaxowlSession *session,
                                           uint8_t threshold,
                                           bool allow_all);

// Turns rank banner comments in emitted documents on or off.
//
// # Safety
// `session` must come from one of the open functions.
enum TaxowlStatus taxowl_session_set_comments(struct TaxowlSession *session, bool comments);

// # Safety
// `session` must come from one of the open functions, or be null.
void taxowl_session_free(struct TaxowlSession *session);

// Converts a names list (one name per line, optional tab-separated rank,
// `#` comments) into an OWL document and a CSV report.
//
// Returns `TAXOWL_STATUS_PARTIAL` when some names failed; both outputs are still
// set. `report` may be null when the report is not wanted.
//
// # Safety
// `session` must come from one of the open functions, `names` must be a
// valid C string and `xml` a writable pointer.
enum TaxowlStatus taxowl_convert(const struct TaxowlSession *session,
                                 const char *names,
                                 char **xml,
                                 char **report);

// Canonicalizes one scientific name.
//
// # Safety
// `name` must be a valid C string and `out` a writable pointer.
enum TaxowlStatus taxowl_normalize(const char *name, char **out);

// Merges `count` OWL documents into one.
//
// # Safety
// `documents` must point to `count` valid C strings and `out` must be a
// writable pointer.
enum TaxowlStatus taxowl_merge(const char *const *documents, size_t count, char **out);

// # Safety
// `s` must be a string returned by this library, or null.
void taxowl_string_free(char *s);

// Message for the last failed call on this thread, or null. Valid until
// the next call into this library on the same thread.
const char *taxowl_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAXOWL_H */
