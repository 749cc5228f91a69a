#ifndef GRIDTD_H
#define GRIDTD_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes shared with the CLI exit-code contract. */
#define GRIDTD_OK 0
#define GRIDTD_EINPUT 1  /* bad arguments, unreadable files, invalid case */
#define GRIDTD_ESOLVER 2 /* numerical failure */

typedef struct gridtd_net gridtd_net;

const char* gridtd_version(void);

/* Message of the last failing call on this thread; empty string otherwise. */
const char* gridtd_last_error(void);

/* Parses (but does not validate) a JSON case file. */
int gridtd_net_load(const char* path, gridtd_net** out);
void gridtd_net_free(gridtd_net* net);

/* Full invariant check; GRIDTD_EINPUT with a message on violation. */
int gridtd_net_validate(const gridtd_net* net);

/* One-line description: bus/branch/generator/feeder counts. */
int gridtd_net_summary(const gridtd_net* net, char* buf, size_t len);

/* Coupled T+D power flow at the case setpoints. Writes a single-row result
 * CSV when out_csv is non-NULL; summary receives the solve diagnostics. */
int gridtd_pf(const gridtd_net* net, double load_scale, const char* out_csv, char* summary,
              size_t len);

/* JSON-configured pipelines; each returns the 0/1/2 exit code and writes a
 * human-readable outcome into message.
 *
 * steady:   {"case", "out", "profiles", "from", "to", "load_scale", "eps",
 *            "case_index", "jobs"}
 * transient:{"case", "out", "profiles", "n", "seed", "jobs", "kind_weights"}
 * profiles is either {"dir": "..."} or
 *   {"synthetic": true, "zones", "start", "minutes", "seed", "noise"}
 */
int gridtd_steady(const char* config_json, char* message, size_t len);
int gridtd_transient(const char* config_json, char* message, size_t len);

/* {"out", "zones", "start", "minutes", "seed", "noise"} -> zone CSV files. */
int gridtd_synth_profiles(const char* config_json, char* message, size_t len);

/* {"task": "forecast"|"events"|"fidelity"|"psd"|"modes", "out", ...}
 * forecast: {"in", "horizon"}           events:  {"in"} with y_true,y_pred
 * fidelity: {"real", "synthetic", "max_lag"}
 * psd:      {"in", "channel", "sample_interval", "nperseg"}
 * modes:    {"in", "channel", "sample_rate", "order", "from_row"}         */
int gridtd_metrics(const char* config_json, char* message, size_t len);

#ifdef __cplusplus
}
#endif

#endif /* GRIDTD_H */
