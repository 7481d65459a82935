#include <stdio.h>
#include <string.h>

#include "hornshacl.h"

/* Exits with the validation status, or 100 plus a step number on misuse. */
int main(void) {
    HsKnowledgeBase *kb = NULL;
    if (hs_kb_new("A <= some p.B\nB <= C\n", "A(a)\n", &kb) != HS_STATUS_VALID) return 101;
    HsReport *report = NULL;
    HsStatus status = hs_validate(kb, "$s <- some [p].C\n", "$s(@a)\n", HS_MODE_REWRITE, 0, &report);
    if (report == NULL) return 102;
    if (hs_report_target_count(report) != 1) return 103;
    bool valid = false;
    if (hs_report_target_valid(report, 0, &valid) != HS_STATUS_VALID || !valid) return 104;
    if (strstr(hs_report_json(report), "\"consistent\": true") == NULL) return 105;
    puts(hs_report_json(report));
    hs_report_free(report);
    if (hs_validate(kb, "$s <- !$s\n", "$s(@a)\n", HS_MODE_DIRECT, 0, &report) != HS_STATUS_NOT_STRATIFIED) return 106;
    if (hs_last_error() == NULL) return 107;
    hs_kb_free(kb);
    return (int)status;
}
