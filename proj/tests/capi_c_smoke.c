/* The public header must compile as C and the library must link from C. */
#include <math.h>
#include <stdio.h>

#include "boxctrl/boxctrl.h"

int main(void) {
  double m[2 * 2 * 2];
  double mb = 0.0, db = 0.0;
  if (boxctrl_operator_matrix(BOXCTRL_OP_MOMENTUM, NULL, 2, m) != BOXCTRL_OK) return 1;
  /* <phi_1, p phi_2> = 8i/3 */
  if (fabs(m[3] - 8.0 / 3.0) > 1e-14 || m[2] != 0.0) return 2;
  if (boxctrl_form_bounds(-1.0, &mb, &db) != BOXCTRL_ERR_INVALID_ARGUMENT) return 3;
  printf("%s ok (%s)\n", boxctrl_version(), boxctrl_status_name(BOXCTRL_OK));
  return 0;
}
