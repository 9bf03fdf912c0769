/* C ABI for the tmirs library. Maintained alongside crates/ffi/src/lib.rs;
 * tests/capi.rs verifies every exported symbol is declared here. */

#ifndef TMIRS_H
#define TMIRS_H

#include <stdint.h>
#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes returned by every fallible entry point. */
#define TMIRS_OK            0
#define TMIRS_NULL_ARG      1
#define TMIRS_INVALID_ARG   2
#define TMIRS_CONFIG_ERROR  3
#define TMIRS_IO_ERROR      4
#define TMIRS_INTERNAL      5

/* Opaque scenario handle: resolved configuration plus derived geometry,
 * link parameters and the phase-profile anchor. */
typedef struct TmirsScenario TmirsScenario;

/* Scenario with the published experiment constants. */
TmirsScenario *tmirs_scenario_paper(void);

/* Scenario with the laptop-scale preset. */
TmirsScenario *tmirs_scenario_desk(void);

/* Load a key/value config file over the paper defaults; writes the new
 * handle through `out` on success. */
int32_t tmirs_scenario_load(const char *path, TmirsScenario **out);

/* Release a scenario handle. NULL is a no-op. */
void tmirs_scenario_free(TmirsScenario *scenario);

/* Number of reflecting elements (required length of the tau_on/delta_tau
 * arrays). Returns 0 for NULL. */
size_t tmirs_scenario_elements(const TmirsScenario *scenario);

/* Fourier coefficient of the on/off switching waveform at harmonic l:
 * delta_tau * sinc(l*pi*delta_tau) * exp(-j*l*pi*(2*tau_on + delta_tau)).
 * tau_on in [0,1), delta_tau in [0,1]. */
int32_t tmirs_switching_coeff(int64_t l, double tau_on, double delta_tau,
                              double *re, double *im);

/* Effective sum rate of a configuration observed from (theta, phi) degrees,
 * phase profile anchored at the scenario's user direction. tau_on and
 * delta_tau are arrays of length tmirs_scenario_elements(). */
int32_t tmirs_effective_sum_rate(const TmirsScenario *scenario,
                                 const double *tau_on, const double *delta_tau,
                                 size_t len, double theta, double phi,
                                 double *out);

/* Secrecy rate: effective rate at (cu_theta, cu_phi) minus the rate at the
 * scenario's eavesdropper direction. */
int32_t tmirs_secrecy_rate(const TmirsScenario *scenario,
                           const double *tau_on, const double *delta_tau,
                           size_t len, double cu_theta, double cu_phi,
                           double *out);

/* Monte-Carlo symbol error rate observed from (theta, phi) over n_frames
 * OFDM frames, deterministic per seed. `degenerate` (may be NULL) receives 1
 * when the equalizer gain was numerically zero and the estimate fell back to
 * chance level. */
int32_t tmirs_ser(const TmirsScenario *scenario,
                  const double *tau_on, const double *delta_tau, size_t len,
                  double theta, double phi, uint64_t n_frames, uint64_t seed,
                  double *out_ser, int32_t *degenerate);

/* Static description of a status code. */
const char *tmirs_status_message(int32_t status);

/* Library version string, owned by the library. */
const char *tmirs_version(void);

#ifdef __cplusplus
}
#endif

#endif /* TMIRS_H */
