#pragma once

namespace notif {

// Outcome of one auction. Charges are zero when nothing is sent.
struct Decision {
  bool send = false;
  double bid = 0.0;  // combined bid beta_i v + beta_p v_p
  double type_charge = 0.0;
  double platform_charge = 0.0;
};

}  // namespace notif
