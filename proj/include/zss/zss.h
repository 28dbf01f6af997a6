/* C interface to the zero-shot segmentation core. All functions return a
 * status code: 0 success, 2 config/IO error, 3 metric undefined, 4 numeric
 * abort. Error text and the last command's JSON result are kept on the
 * session handle. */
#ifndef ZSS_H
#define ZSS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct zss_session zss_session;

zss_session* zss_session_new(void);
void zss_session_free(zss_session* s);

/* valid until the next command on the same session */
const char* zss_session_error(const zss_session* s);
const char* zss_session_result_json(const zss_session* s);

/* config_json: RunConfig as JSON text; missing keys take defaults */
int zss_gen_data(zss_session* s, const char* config_json, const char* out_dir);
int zss_train(zss_session* s, const char* config_json);
int zss_selftrain(zss_session* s, const char* config_json, const char* checkpoint_path);
int zss_eval(zss_session* s, const char* checkpoint_path, const char* data_dir);
/* values_csv / seeds_csv: comma-separated; empty string = axis defaults */
int zss_ablate(zss_session* s, const char* config_json, const char* axis,
               const char* values_csv, const char* seeds_csv);

#ifdef __cplusplus
}
#endif

#endif /* ZSS_H */
