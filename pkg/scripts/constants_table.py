"""Print the approximation constant gamma_k next to its Stirling approximation."""
import argparse
import math

from recharging_bandits.oracle import gamma


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ks", default="1,2,3,4,5,10,20,50,100")
    args = ap.parse_args()
    print("k,gamma_k,stirling")
    for k in map(int, args.ks.split(",")):
        print(f"{k},{gamma(k):.6f},{1 - 1 / math.sqrt(2 * math.pi * k):.6f}")


if __name__ == "__main__":
    main()
