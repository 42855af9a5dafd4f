namespace fracdyn {}
