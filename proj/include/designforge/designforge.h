#ifndef DESIGNFORGE_H
#define DESIGNFORGE_H

#include <stddef.h>
#include <stdint.h>

#if defined(DFG_BUILDING_LIBRARY)
#define DFG_API __attribute__((visibility("default")))
#else
#define DFG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dfg_status {
  DFG_OK = 0,
  DFG_ERR_NULL = 1,       /* a required pointer argument was NULL */
  DFG_ERR_INPUT = 2,      /* invalid argument or document */
  DFG_ERR_USAGE = 3,      /* bad run configuration: unknown key, missing key, bad value */
  DFG_ERR_NUMERICAL = 4,  /* the computation could not proceed */
  DFG_ERR_NOT_FOUND = 5,  /* lookup of an absent key or index */
  DFG_ERR_INTERNAL = 6
} dfg_status;

typedef struct dfg_manifold dfg_manifold;
typedef struct dfg_nodes dfg_nodes;
typedef struct dfg_config dfg_config;
typedef struct dfg_result dfg_result;

DFG_API const char* dfg_version(void);
/* Message of the last failing call on this thread; "" after success. */
DFG_API const char* dfg_last_error(void);
/* Frees strings returned through char** out-parameters. */
DFG_API void dfg_string_free(char* s);

/* Tags: torus1 (or circle), torus2, torus3, sphere2. */
DFG_API dfg_status dfg_manifold_create(const char* tag, dfg_manifold** out);
DFG_API void dfg_manifold_destroy(dfg_manifold* m);
DFG_API int dfg_manifold_dim(const dfg_manifold* m);

/* count points of dim coordinates each, row-major. Points are canonicalized. */
DFG_API dfg_status dfg_nodes_create(const dfg_manifold* m, const double* coords, size_t count, dfg_nodes** out);
DFG_API dfg_status dfg_nodes_from_json(const char* text, dfg_nodes** out);
DFG_API dfg_status dfg_nodes_to_json(const dfg_nodes* nodes, char** out);
DFG_API void dfg_nodes_destroy(dfg_nodes* nodes);
DFG_API size_t dfg_nodes_size(const dfg_nodes* nodes);
DFG_API int dfg_nodes_dim(const dfg_nodes* nodes);
DFG_API dfg_status dfg_nodes_point(const dfg_nodes* nodes, size_t i, double* coords);
/* rule: center, random, inner_center. */
DFG_API dfg_status dfg_partition_nodes(const dfg_manifold* m, int N, const char* rule, uint64_t seed, dfg_nodes** out);

DFG_API dfg_status dfg_design_defect(const dfg_nodes* nodes, double L, double* defect, double* gram_defect);
/* init: centers, random. The best iterate is returned even when success is 0. */
DFG_API dfg_status dfg_construct_design(const dfg_manifold* m, double L, int N, const char* init, uint64_t seed,
                                        double tol, int budget, dfg_nodes** out, double* defect, int* success);
DFG_API dfg_status dfg_worst_case_error(const dfg_nodes* nodes, double alpha, double lambda_max, double* wce,
                                        double* wce_upper);

/* Subcommands and their keys. describe returns a JSON document. */
DFG_API size_t dfg_command_count(void);
DFG_API const char* dfg_command_name(size_t i);
DFG_API dfg_status dfg_command_describe(const char* name, char** json_out);

DFG_API dfg_status dfg_config_create(const char* subcommand, dfg_config** out);
DFG_API dfg_status dfg_config_parse(const char* text, dfg_config** out);
DFG_API dfg_status dfg_config_load(const char* path, dfg_config** out);
DFG_API void dfg_config_destroy(dfg_config* cfg);
DFG_API dfg_status dfg_config_set_subcommand(dfg_config* cfg, const char* name);
/* Empty string when unset. */
DFG_API const char* dfg_config_subcommand(const dfg_config* cfg);
DFG_API dfg_status dfg_config_set(dfg_config* cfg, const char* key, const char* value);
DFG_API dfg_status dfg_config_get(const dfg_config* cfg, const char* key, char** value_out);
DFG_API dfg_status dfg_config_serialize(const dfg_config* cfg, char** out);
DFG_API dfg_status dfg_config_validate(const dfg_config* cfg);

/* Runs in memory; nothing is written until dfg_result_emit. */
DFG_API dfg_status dfg_run(const dfg_config* cfg, dfg_result** out);
DFG_API void dfg_result_destroy(dfg_result* r);
/* 0 success, 2 certification or assertion failure. */
DFG_API int dfg_result_exit_code(const dfg_result* r);
DFG_API const char* dfg_result_summary(const dfg_result* r);
DFG_API size_t dfg_result_file_count(const dfg_result* r);
DFG_API const char* dfg_result_file_name(const dfg_result* r, size_t i);
DFG_API const char* dfg_result_file_content(const dfg_result* r, size_t i, size_t* length);
/* Writes the files into the config's out_dir through temp files and rename. */
DFG_API dfg_status dfg_result_emit(const dfg_result* r, const dfg_config* cfg);

#ifdef __cplusplus
}
#endif

#endif
