#include <stdio.h>
#include <string.h>

#include "seamless.h"

int main(void) {
    SeamlessDesign *design = NULL;
    if (seamless_design_default(&design) != SEAMLESS_STATUS_OK) {
        fprintf(stderr, "%s\n", seamless_last_error_message());
        return 1;
    }
    size_t arms = 0;
    seamless_design_num_arms(design, &arms);

    uint32_t counts[9] = {0};
    double raw[3], probs[3];
    uint8_t dropped[3];
    if (seamless_interim_update(design, counts, arms, raw, probs, dropped) != SEAMLESS_STATUS_OK) {
        fprintf(stderr, "%s\n", seamless_last_error_message());
        return 1;
    }

    SeamlessDecision d;
    seamless_decide(0.02, 0.037, 0.608, &d);

    SeamlessStatus bad = seamless_decide(0.5, 0.6, 0.1, &d);
    int has_message = strlen(seamless_last_error_message()) > 0;

    printf("version=%s arms=%zu p0=%.6f decision=%d bad=%d message=%d\n",
           seamless_version(), arms, probs[0], (int)d, (int)bad, has_message);
    seamless_design_free(design);
    return 0;
}
