// placeholder until certificates land
